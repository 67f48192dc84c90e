"""
Synthetic GNSS and 5G observations.

Raw GNSS observations are carried in ``np.longdouble``: receiver and satellite
clock terms reach ``c * 1 ms ~ 3e5 m`` on top of ~2e7 m ranges, and float64
rounding at that magnitude (~4e-9 m) would leave residue after differencing.
Double differences are returned in float64.

Line-of-sight convention: :func:`los_unit_vector` points from the receiver to
the satellite.  The DD design matrix ``H`` uses the opposite (satellite to
user) direction so that ``rho_u - rho_b ~= h^T (p_u - p_b)`` row by row.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .constants import GPS_L1_WAVELENGTH, NR_BASIC_TIME_UNIT, SPEED_OF_LIGHT
from .errors import DimensionError, DomainError
from .fiveg import model, wrap_angle

# A zero sigma draws no noise; its covariance entry is floored at these values
# so that weights stay finite (noise-free data fit any positive weighting).
SIGMA_FLOOR_RANGE = 1e-6  # m
SIGMA_FLOOR_ANGLE = 1e-6  # rad
SIGMA_FLOOR_DELAY = 1e-15  # s


@dataclass
class NoiseConfig:
    """Noise standard deviations.  ``sigma_code`` defaults to 100x the phase."""

    sigma_phase: float = 1e-3  # m
    sigma_code: Optional[float] = None  # m
    sigma_az: float = 3e-3  # rad
    sigma_el: float = 3e-3  # rad
    sigma_tau: float = 1e-9  # s

    def __post_init__(self):
        if self.sigma_code is None:
            self.sigma_code = 100.0 * self.sigma_phase
        for name in ("sigma_phase", "sigma_code", "sigma_az", "sigma_el", "sigma_tau"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @classmethod
    def noise_free(cls):
        return cls(0.0, 0.0, 0.0, 0.0, 0.0)


@dataclass
class CommonErrors:
    """Error terms shared by user and base (short baseline)."""

    iono: np.ndarray  # (N,) m
    tropo: np.ndarray  # (N,) m
    sat_clock: np.ndarray  # (N,) s
    user_clock: float = 0.0  # s
    base_clock: float = 0.0  # s

    @classmethod
    def zeros(cls, n):
        return cls(np.zeros(n), np.zeros(n), np.zeros(n))


@dataclass
class Scenario:
    p_u: np.ndarray
    p_b: np.ndarray
    bs_positions: np.ndarray  # (L, 3)
    bs_rotations: np.ndarray  # (L, 3, 3)
    sat_positions: np.ndarray  # (N, 3)
    truth_ambiguities: np.ndarray  # (N,) integer SD ambiguities
    clock_bias: float = 0.0  # s
    clock_cycle: float = NR_BASIC_TIME_UNIT  # s
    wavelength: float = GPS_L1_WAVELENGTH
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    common_errors: Optional[CommonErrors] = None

    def __post_init__(self):
        self.p_u = np.asarray(self.p_u, dtype=float)
        self.p_b = np.asarray(self.p_b, dtype=float)
        self.bs_positions = np.asarray(self.bs_positions, dtype=float).reshape(-1, 3)
        self.bs_rotations = np.asarray(self.bs_rotations, dtype=float).reshape(-1, 3, 3)
        self.sat_positions = np.asarray(self.sat_positions, dtype=float).reshape(-1, 3)
        self.truth_ambiguities = np.asarray(self.truth_ambiguities, dtype=np.int64).reshape(-1)
        if self.common_errors is None:
            self.common_errors = CommonErrors.zeros(self.N)
        self.validate()

    @property
    def N(self) -> int:
        return self.sat_positions.shape[0]

    @property
    def L(self) -> int:
        return self.bs_positions.shape[0]

    @property
    def bs_poses(self):
        return list(zip(self.bs_positions, self.bs_rotations))

    def validate(self):
        if len(self.bs_rotations) != self.L:
            raise DimensionError("one rotation per base station is required")
        if len(self.truth_ambiguities) != self.N:
            raise DimensionError("one truth ambiguity per satellite is required")
        for R in self.bs_rotations:
            if np.linalg.norm(R.T @ R - np.eye(3)) >= 1e-12 or abs(np.linalg.det(R) - 1.0) > 1e-12:
                raise DomainError("base-station orientation is not a rotation matrix")
        if not 0.0 <= self.clock_bias < self.clock_cycle:
            raise DomainError("clock bias must lie in [0, clock_cycle)")

    def truth_dd_ambiguities(self, ref_index: int = 0) -> np.ndarray:
        K = self.truth_ambiguities
        return np.delete(K - K[ref_index], ref_index)


@dataclass
class RawObservations:
    """Undifferenced code/phase of one receiver, in meters (longdouble)."""

    code: np.ndarray
    phase: np.ndarray
    receiver: np.ndarray
    sat_positions: np.ndarray
    wavelength: float
    sigma_code: float
    sigma_phase: float


@dataclass
class DdObservations:
    p: np.ndarray  # (N-1,) DD pseudo-ranges [m]
    phi: np.ndarray  # (N-1,) DD carrier phases [m]
    H: np.ndarray  # (N-1, 3)
    p_b: np.ndarray
    wavelength: float
    Q_y1: np.ndarray  # (2N-2, 2N-2)
    ref_index: int = 0

    @property
    def n_dd(self) -> int:
        return self.H.shape[0]

    @property
    def y1(self) -> np.ndarray:
        return np.concatenate([self.p, self.phi])

    @property
    def B(self) -> np.ndarray:
        return np.vstack([self.H, self.H])

    @property
    def C(self) -> np.ndarray:
        n = self.n_dd
        return np.vstack([np.zeros((n, n)), self.wavelength * np.eye(n)])

    @property
    def b(self) -> np.ndarray:
        return self.B @ self.p_b

    @property
    def A(self) -> np.ndarray:
        """(2N-2) x (N+3) design matrix over ``[p_u, k, Delta]``."""
        return np.hstack([self.B, self.C, np.zeros((2 * self.n_dd, 1))])

    def residual(self, p_u, k) -> np.ndarray:
        """``y1 - B p_u - C k + b`` evaluated around the base to avoid cancellation."""
        dp = np.asarray(p_u, dtype=float) - self.p_b
        hd = self.H @ dp
        return np.concatenate([self.p - hd, self.phi - hd - self.wavelength * np.asarray(k, dtype=float)])


@dataclass
class FiveGObservations:
    az: np.ndarray
    el: np.ndarray
    tau: np.ndarray
    Q_y2: np.ndarray

    @property
    def L(self) -> int:
        return len(self.az)

    @property
    def y2(self) -> np.ndarray:
        return np.concatenate([self.az, self.el, self.tau])


def los_unit_vector(p_sat, p_rx) -> np.ndarray:
    """Unit vector from ``p_rx`` toward ``p_sat``."""
    v = np.asarray(p_sat, dtype=float) - np.asarray(p_rx, dtype=float)
    n = np.linalg.norm(v)
    if n == 0.0:
        raise DomainError("satellite and receiver positions coincide")
    return v / n


def _ranges(sat_positions, rx):
    return np.linalg.norm(sat_positions - rx, axis=1)


def generate_raw(scenario: Scenario, rng: Optional[np.random.Generator] = None, add_noise: bool = True):
    """Raw code/phase for (user, base).

    Both receivers share the per-satellite ionosphere, troposphere and
    satellite clock.  The base ambiguities are zero, so the SD ambiguity of
    satellite n equals ``scenario.truth_ambiguities[n]``.  With
    ``add_noise=False`` the sigmas still define the covariance but no noise is
    drawn.
    """
    if scenario.N < 1:
        raise DimensionError("at least one satellite is required")
    rng = np.random.default_rng() if rng is None else rng
    ce = scenario.common_errors
    c = np.longdouble(SPEED_OF_LIGHT)
    lam = np.longdouble(scenario.wavelength)
    iono = np.asarray(ce.iono, dtype=np.longdouble)
    tropo = np.asarray(ce.tropo, dtype=np.longdouble)
    sat_clk = np.asarray(ce.sat_clock, dtype=np.longdouble)
    nz = scenario.noise
    out = []
    for rx, rx_clock, K in (
        (scenario.p_u, ce.user_clock, scenario.truth_ambiguities),
        (scenario.p_b, ce.base_clock, np.zeros(scenario.N, dtype=np.int64)),
    ):
        rho = _ranges(scenario.sat_positions, rx).astype(np.longdouble)
        clock = c * (np.longdouble(rx_clock) - sat_clk)
        if add_noise:
            eps = rng.normal(0.0, 1.0, scenario.N) * nz.sigma_code
            vsig = rng.normal(0.0, 1.0, scenario.N) * nz.sigma_phase
        else:
            eps = vsig = np.zeros(scenario.N)
        code = rho + iono + tropo + clock + eps.astype(np.longdouble)
        phase = rho + lam * K.astype(np.longdouble) - iono + tropo + clock + vsig.astype(np.longdouble)
        out.append(
            RawObservations(code, phase, np.array(rx, dtype=float), scenario.sat_positions,
                            scenario.wavelength, nz.sigma_code, nz.sigma_phase)
        )
    return out[0], out[1]


def dd_operator(n_sat: int, ref_index: int) -> np.ndarray:
    """(N-1) x 2N matrix mapping [user; base] raw values to DDs."""
    S = np.hstack([np.eye(n_sat), -np.eye(n_sat)])
    Dm = np.delete(np.eye(n_sat), ref_index, axis=0)
    Dm[:, ref_index] -= 1.0
    return Dm @ S


def double_difference(raw_user: RawObservations, raw_base: RawObservations, ref_index: int = 0) -> DdObservations:
    """Between-receiver, then between-satellite differences against ``ref_index``."""
    n = len(raw_user.code)
    if n < 2 or len(raw_base.code) != n:
        raise DimensionError(f"double differencing needs the same N >= 2 satellites on both receivers, got {n}")
    if not 0 <= ref_index < n:
        raise IndexError(f"ref_index {ref_index} out of range for {n} satellites")
    keep = np.delete(np.arange(n), ref_index)
    sd_code = raw_user.code - raw_base.code
    sd_phase = raw_user.phase - raw_base.phase
    dd_code = (sd_code[keep] - sd_code[ref_index]).astype(np.float64)
    dd_phase = (sd_phase[keep] - sd_phase[ref_index]).astype(np.float64)

    # satellite-to-user directions
    h = -np.array([los_unit_vector(s, raw_user.receiver) for s in raw_user.sat_positions])
    H = h[keep] - h[ref_index]

    D = dd_operator(n, ref_index)
    DDt = D @ D.T
    Qc = max(raw_user.sigma_code, SIGMA_FLOOR_RANGE) ** 2 * DDt
    Qp = max(raw_user.sigma_phase, SIGMA_FLOOR_RANGE) ** 2 * DDt
    Q = np.zeros((2 * (n - 1), 2 * (n - 1)))
    Q[: n - 1, : n - 1] = Qc
    Q[n - 1 :, n - 1 :] = Qp
    return DdObservations(dd_code, dd_phase, H, np.array(raw_base.receiver, dtype=float),
                          raw_user.wavelength, Q, ref_index)


def generate_5g(scenario: Scenario, rng: Optional[np.random.Generator] = None,
                add_noise: bool = True) -> FiveGObservations:
    """AOD azimuth/elevation and delay from every 5G BS, with Gaussian noise."""
    L = scenario.L
    if L < 1:
        raise DimensionError("at least one 5G base station is required")
    if np.any(np.linalg.norm(scenario.bs_positions - scenario.p_u, axis=1) == 0.0):
        raise DomainError("user coincides with a 5G base station")
    rng = np.random.default_rng() if rng is None else rng
    y = model(scenario.p_u, scenario.bs_positions, scenario.bs_rotations, 0.0)
    nz = scenario.noise
    w = rng.normal(0.0, 1.0, (3, L)) if add_noise else np.zeros((3, L))
    az = wrap_angle(y[:L] + w[0] * nz.sigma_az)
    el = y[L : 2 * L] + w[1] * nz.sigma_el
    # keep el in its principal range; reflect across the pole if noise overshoots
    over = np.abs(el) > np.pi / 2
    if np.any(over):
        el = np.where(over, np.sign(el) * np.pi - el, el)
        az = np.where(over, wrap_angle(az + np.pi), az)
    tau = y[2 * L :] / SPEED_OF_LIGHT + scenario.clock_bias + w[2] * nz.sigma_tau
    Q = np.diag(np.concatenate([
        np.full(L, max(nz.sigma_az, SIGMA_FLOOR_ANGLE) ** 2),
        np.full(L, max(nz.sigma_el, SIGMA_FLOOR_ANGLE) ** 2),
        np.full(L, max(nz.sigma_tau, SIGMA_FLOOR_DELAY) ** 2),
    ]))
    return FiveGObservations(az, el, tau, Q)
