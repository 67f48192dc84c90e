"""
Joint GNSS-RTK + 5G estimator.

Unknowns are ``x = [p_u, k, Delta]`` (``Delta`` dropped when there is no 5G
BS).  Public functions take and return :class:`StateVector` with ``Delta`` in
seconds.  Internally the clock is carried as ``c*Delta`` in meters and the
delay residual as ``c*(tau - tau(x))``, with the matching rescaling of W2; the
cost value is unchanged but the problem is far better conditioned.

Pipeline (:func:`solve`): initialize -> float solve -> ambiguity covariance ->
integer search -> fixed solve.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg

from . import ils
from .availability import assess
from .constants import NR_BASIC_TIME_UNIT, SPEED_OF_LIGHT
from .errors import (AvailabilityError, DimensionError, DivergenceError,
                     NumericalError, RankDeficiencyError)
from .fiveg import direction_in_frame, model, model_and_jacobian, wrap_angle
from .observation import DdObservations, FiveGObservations
from .rtk_core import solve_float_rtk, spd_factor

C = SPEED_OF_LIGHT


@dataclass
class StateVector:
    p_u: np.ndarray
    k: np.ndarray
    delta: Optional[float] = None  # seconds; None when L = 0

    def __post_init__(self):
        self.p_u = np.asarray(self.p_u, dtype=float).reshape(3)
        self.k = np.asarray(self.k).reshape(-1)

    @property
    def dim(self) -> int:
        return 3 + len(self.k) + (self.delta is not None)

    def as_array(self) -> np.ndarray:
        """Public layout ``[p_u, k, Delta(s)]``."""
        tail = [] if self.delta is None else [self.delta]
        return np.concatenate([self.p_u, self.k.astype(float), tail])

    @classmethod
    def from_array(cls, x, n_k: int, has_clock: bool):
        x = np.asarray(x, dtype=float)
        return cls(x[:3].copy(), x[3:3 + n_k].copy(), float(x[3 + n_k]) if has_clock else None)

    def _internal(self) -> np.ndarray:
        tail = [] if self.delta is None else [C * self.delta]
        return np.concatenate([self.p_u, self.k.astype(float), tail])


@dataclass
class HybridData:
    dd: Optional[DdObservations]
    fg: Optional[FiveGObservations]
    W1: Optional[np.ndarray]
    W2: Optional[np.ndarray]
    epsilon: float = 0.6
    bs_positions: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    bs_rotations: np.ndarray = field(default_factory=lambda: np.zeros((0, 3, 3)))
    clock_cycle: float = NR_BASIC_TIME_UNIT
    n_sat: Optional[int] = None

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        self.bs_positions = np.asarray(self.bs_positions, dtype=float).reshape(-1, 3)
        self.bs_rotations = np.asarray(self.bs_rotations, dtype=float).reshape(-1, 3, 3)
        if self.n_sat is None:
            self.n_sat = self.dd.n_dd + 1 if self.dd is not None else 0
        if (self.fg is None) != (self.L == 0):
            raise DimensionError("5G observations and BS poses disagree on L")

    @property
    def L(self) -> int:
        return self.bs_positions.shape[0]

    @property
    def n_k(self) -> int:
        return self.dd.n_dd if self.dd is not None else 0

    @property
    def has_clock(self) -> bool:
        return self.L > 0


def build_weights(Q_y1, Q_y2, w2_norm: str = "gnss"):
    """``W1 = Q1^-1/||Q1^-1||_F`` and ``W2 = Q2^-1/||Q1^-1||_F``.

    ``w2_norm="self"`` normalizes W2 by ``||Q2^-1||_F`` instead.  Either
    covariance may be None (no observations of that kind).
    """
    def inv(Q, name):
        Q = np.asarray(Q, dtype=float)
        dg = np.diag(Q)
        if not np.all(dg > 0):
            raise NumericalError(f"{name} has a non-positive variance")
        # Jacobi scaling: mixed units (rad^2 vs s^2) must not look singular
        s = 1.0 / np.sqrt(dg)
        try:
            c = spd_factor(s[:, None] * Q * s[None, :], name)
        except RankDeficiencyError as exc:
            raise NumericalError(f"{name} is singular") from exc
        Qi = s[:, None] * linalg.cho_solve((c, True), np.eye(Q.shape[0])) * s[None, :]
        return 0.5 * (Qi + Qi.T)

    Q1i = inv(Q_y1, "Q_y1") if Q_y1 is not None and np.size(Q_y1) else None
    Q2i = inv(Q_y2, "Q_y2") if Q_y2 is not None and np.size(Q_y2) else None
    if w2_norm not in ("gnss", "self"):
        raise ValueError("w2_norm must be 'gnss' or 'self'")
    W1 = W2 = None
    if Q1i is not None:
        W1 = Q1i / np.linalg.norm(Q1i, "fro")
    if Q2i is not None:
        if w2_norm == "self" or Q1i is None:
            W2 = Q2i / np.linalg.norm(Q2i, "fro")
        else:
            W2 = Q2i / np.linalg.norm(Q1i, "fro")
    return W1, W2


def make_data(dd, fg, bs_positions=None, bs_rotations=None, epsilon=0.6,
              w2_norm="gnss", clock_cycle=NR_BASIC_TIME_UNIT, n_sat=None) -> HybridData:
    W1, W2 = build_weights(None if dd is None else dd.Q_y1, None if fg is None else fg.Q_y2, w2_norm)
    if bs_positions is None:
        bs_positions = np.zeros((0, 3))
        bs_rotations = np.zeros((0, 3, 3))
    return HybridData(dd, fg, W1, W2, epsilon, bs_positions, bs_rotations, clock_cycle, n_sat)


class _Problem:
    """Joint cost over internal coordinates ``z = [p, k, c*Delta]``."""

    def __init__(self, data: HybridData):
        self.data = data
        self.nk = data.n_k
        self.L = data.L
        self.n = 3 + self.nk + (1 if self.L else 0)
        eps = data.epsilon
        if data.dd is not None:
            dd = data.dd
            self.H = dd.H
            self.p_b = dd.p_b
            self.lam = dd.wavelength
            self.y_code = dd.p
            self.y_phase = dd.phi
            self.W1e = eps * np.asarray(data.W1)
            # d(model)/dz for the GNSS block; residual = y1 - J1 z (+ const)
            J1 = np.zeros((2 * self.nk, self.n))
            J1[:, :3] = dd.B
            J1[self.nk:, 3:3 + self.nk] = self.lam * np.eye(self.nk)
            self.J1 = J1
            self.G1 = J1.T @ self.W1e @ J1
        if self.L:
            fg = data.fg
            L = self.L
            self.y2 = np.concatenate([fg.az, fg.el, C * np.asarray(fg.tau)])
            s = np.concatenate([np.ones(2 * L), np.full(L, 1.0 / C)])
            self.W2e = (1.0 - eps) * (s[:, None] * np.asarray(data.W2) * s[None, :])
            self.bs_pos = np.ascontiguousarray(data.bs_positions)
            self.bs_rot = np.ascontiguousarray(data.bs_rotations)

    def r1(self, z):
        hd = self.H @ (z[:3] - self.p_b)
        return np.concatenate([self.y_code - hd, self.y_phase - hd - self.lam * z[3:3 + self.nk]])

    def r2(self, z):
        y, J = model_and_jacobian(z[:3], self.bs_pos, self.bs_rot, z[-1])
        r = self.y2 - y
        r[: self.L] = wrap_angle(r[: self.L])
        return r, J

    def cost(self, z) -> float:
        f = 0.0
        if self.nk:
            r = self.r1(z)
            f += r @ self.W1e @ r
        if self.L:
            r = self.y2 - model(z[:3], self.bs_pos, self.bs_rot, z[-1])
            r[: self.L] = wrap_angle(r[: self.L])
            f += r @ self.W2e @ r
        return float(f)

    def _J2(self, Jm):
        J2 = np.zeros((3 * self.L, self.n))
        J2[:, :3] = Jm[:, :3]
        J2[:, -1] = Jm[:, 3]
        return J2

    def cost_grad(self, z, want_gn=False):
        f = 0.0
        g = np.zeros(self.n)
        G = np.zeros((self.n, self.n)) if want_gn else None
        if self.nk:
            r = self.r1(z)
            Wr = self.W1e @ r
            f += r @ Wr
            g -= 2.0 * (self.J1.T @ Wr)
            if want_gn:
                G += self.G1
        if self.L:
            r, Jm = self.r2(z)
            J2 = self._J2(Jm)
            Wr = self.W2e @ r
            f += r @ Wr
            g -= 2.0 * (J2.T @ Wr)
            if want_gn:
                G += J2.T @ self.W2e @ J2
        return float(f), g, G

    def gn_matrix(self, z):
        return self.cost_grad(z, want_gn=True)[2]


def _to_public_grad(g, has_clock):
    g = g.copy()
    if has_clock:
        g[-1] *= C
    return g


def _check_state(x: StateVector, data: HybridData):
    if len(x.k) != data.n_k or (x.delta is None) == data.has_clock:
        raise DimensionError(
            f"state has {len(x.k)} ambiguities/clock={x.delta is not None}, "
            f"data expects {data.n_k}/clock={data.has_clock}"
        )


def joint_cost(x: StateVector, data: HybridData) -> float:
    """``eps ||y1 - A x + b||^2_W1 + (1-eps) ||y2 - y2(x)||^2_W2`` (azimuth residual wrapped)."""
    _check_state(x, data)
    return _Problem(data).cost(x._internal())


def joint_gradient(x: StateVector, data: HybridData) -> np.ndarray:
    """Analytic gradient in the public layout (per second for the Delta entry)."""
    _check_state(x, data)
    _, g, _ = _Problem(data).cost_grad(x._internal())
    return _to_public_grad(g, data.has_clock)


# ---------------------------------------------------------------- solver


@dataclass
class Diagnostics:
    iterations: int
    grad_norm: float
    cost: float
    converged: bool
    reason: str
    costs: list = field(default_factory=list, repr=False)


JOINT_RCOND_MIN = 1e-15
ARMIJO_C1 = 1e-4
ARMIJO_SHRINK = 0.5
MAX_BACKTRACK = 60


def _descend(prob: _Problem, z0, free, method="gn", max_iter=5000, gtol=1e-8, ftol=1e-12):
    """Armijo-backtracking descent on the coordinates flagged in ``free``.

    ``method="gd"`` steps along the negative gradient; ``method="gn"`` along
    the Gauss-Newton direction (same line search).

    The gradient test is ``max|g| < gtol * min(1, max diag G(z0))``: the plain
    ``gtol`` whenever the curvature is O(1) or larger, and scaled down with
    it when the normalized weights make the whole cost tiny (5G-only data).
    """
    z = np.array(z0, dtype=float)
    idx = np.flatnonzero(free)
    f, g, G = prob.cost_grad(z, want_gn=True)
    if not (np.isfinite(f) and np.all(np.isfinite(g))):
        raise DivergenceError("non-finite cost at the starting point", last_iterate=z.copy())
    curv = float(np.max(np.diag(G)[idx], initial=0.0))
    gtol_eff = gtol * min(1.0, curv) if curv > 0.0 else gtol
    costs = [f]
    reason = "max_iter"
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        gf = g[idx]
        if np.max(np.abs(gf), initial=0.0) < gtol_eff:
            converged, reason, it = True, "gtol", it - 1
            break
        if method == "gn":
            Gf = G[np.ix_(idx, idx)]
            try:
                d = -linalg.cho_solve(linalg.cho_factor(Gf, lower=True), gf)
            except linalg.LinAlgError:
                d = -linalg.lstsq(Gf, gf)[0]
            if not np.all(np.isfinite(d)) or d @ gf >= 0.0:
                d = -gf
        else:
            d = -gf
        slope = float(d @ gf)
        t = 1.0
        accepted = False
        for _ in range(MAX_BACKTRACK):
            zt = z.copy()
            zt[idx] += t * d
            ft = prob.cost(zt)
            if np.isfinite(ft) and ft <= f + ARMIJO_C1 * t * slope:
                accepted = True
                break
            t *= ARMIJO_SHRINK
        if not accepted:
            # no representable decrease along d: at the floating-point floor
            converged, reason, it = True, "stalled", it - 1
            break
        # keep halving while it pays; an overshooting step can pass Armijo
        # with a negligible decrease and stall the iteration in a valley
        while True:
            zh = z.copy()
            zh[idx] += 0.5 * t * d
            fh = prob.cost(zh)
            if not fh < ft:
                break
            t, zt, ft = 0.5 * t, zh, fh
        f_old = f
        f, g, G = prob.cost_grad(zt, want_gn=(method == "gn"))
        if not (np.isfinite(f) and np.all(np.isfinite(g))):
            raise DivergenceError("non-finite cost during descent", last_iterate=z.copy())
        z = zt
        costs.append(f)
        if abs(f_old - f) <= ftol * max(abs(f_old), 1e-300):
            converged, reason = True, "ftol"
            break
    gnorm = float(np.max(np.abs(g[idx]), initial=0.0))
    return z, Diagnostics(it, gnorm, f, converged, reason, costs)


def solve_float_hybrid(data: HybridData, x0: StateVector, method: str = "gn", max_iter: int = 5000):
    """Minimize the joint cost with the integer constraint relaxed.

    Returns ``(x_float, diagnostics)``.
    """
    _check_state(x0, data)
    z0 = x0._internal()
    if not np.all(np.isfinite(z0)):
        raise ValueError("x0 must be finite")
    prob = _Problem(data)
    z, diag = _descend(prob, z0, np.ones(prob.n, bool), method, max_iter)
    return _from_internal(z, data), diag


def solve_fixed_hybrid(data: HybridData, k_fixed, x_start: StateVector, method: str = "gn",
                       max_iter: int = 5000):
    """Minimize over ``(p_u, Delta)`` with ambiguities frozen at ``k_fixed``.

    Returns ``(x_fixed, diagnostics)``; ``x_fixed.k`` holds the integers.
    """
    k_fixed = np.asarray(k_fixed)
    if not np.all(np.equal(np.mod(k_fixed, 1), 0)):
        raise ValueError("k_fixed must be integer-valued")
    start = StateVector(x_start.p_u, k_fixed.astype(float), x_start.delta)
    _check_state(start, data)
    prob = _Problem(data)
    free = np.ones(prob.n, bool)
    free[3:3 + prob.nk] = False
    z, diag = _descend(prob, start._internal(), free, method, max_iter)
    x = _from_internal(z, data)
    x.k = k_fixed.astype(np.int64)
    return x, diag


def _from_internal(z, data: HybridData) -> StateVector:
    nk = data.n_k
    return StateVector(z[:3].copy(), z[3:3 + nk].copy(), float(z[-1] / C) if data.has_clock else None)


def extract_ambiguity_covariance(data: HybridData, x_float: StateVector):
    """Float ambiguities and the ambiguity block of the inverse Gauss-Newton Hessian."""
    _check_state(x_float, data)
    prob = _Problem(data)
    G = prob.gn_matrix(x_float._internal())
    dg = np.diag(G)
    if not np.all(dg > 0):
        raise RankDeficiencyError("joint Gauss-Newton matrix has a zero diagonal entry", prob.n)
    # Jacobi scaling: GNSS and 5G blocks can differ by many orders of magnitude,
    # and what is left after scaling is genuine (mm phase vs dm delay)
    s = 1.0 / np.sqrt(dg)
    c = spd_factor(s[:, None] * G * s[None, :], "joint Gauss-Newton matrix", JOINT_RCOND_MIN)
    Q = s[:, None] * linalg.cho_solve((c, True), np.eye(prob.n)) * s[None, :]
    Qk = Q[3:3 + prob.nk, 3:3 + prob.nk]
    return x_float.k.astype(float).copy(), 0.5 * (Qk + Qk.T)


# ---------------------------------------------------------- initialization


def fiveg_position(data: HybridData) -> np.ndarray:
    """Mean over BSs of ``p_B + c tau R t(az, el)``."""
    fg = data.fg
    t = direction_in_frame(fg.az, fg.el)  # (L, 3)
    pts = data.bs_positions + C * np.asarray(fg.tau)[:, None] * np.einsum("lij,lj->li", data.bs_rotations, t)
    return pts.mean(axis=0)


def ambiguities_given_position(data: HybridData, p_u) -> np.ndarray:
    """``(C^T W1 C)^-1 C^T W1 (y1 - B p_u + b)``."""
    dd = data.dd
    W1 = np.asarray(data.W1)
    Cm = dd.C
    rhs = dd.y1 - dd.B @ (np.asarray(p_u) - dd.p_b)
    return linalg.solve(Cm.T @ W1 @ Cm, Cm.T @ W1 @ rhs, assume_a="pos")


def initialize(data: HybridData, mode: str, rng: Optional[np.random.Generator] = None) -> StateVector:
    """Starting point: ``"rtk_float"`` (needs N >= 4) or ``"fiveg"`` (needs L >= 1).

    The clock is drawn uniformly from ``[0, clock_cycle)``.
    """
    rng = np.random.default_rng() if rng is None else rng
    if mode == "rtk_float":
        if data.n_sat < 4 or data.dd is None:
            raise AvailabilityError(f"rtk_float initialization needs N >= 4 satellites, have {data.n_sat}")
        try:
            fs = solve_float_rtk(data.dd, data.W1)
        except RankDeficiencyError as exc:
            raise AvailabilityError(f"standalone float solution unavailable: {exc}") from exc
        p0, k0 = fs.p_hat, fs.k_hat
    elif mode == "fiveg":
        if data.L < 1:
            raise AvailabilityError("fiveg initialization needs at least one 5G BS")
        p0 = fiveg_position(data)
        k0 = ambiguities_given_position(data, p0) if data.n_k else np.zeros(0)
    else:
        raise ValueError(f"unknown initialization mode {mode!r}")
    delta0 = float(rng.uniform(0.0, data.clock_cycle)) if data.has_clock else None
    return StateVector(p0, k0, delta0)


# ---------------------------------------------------------------- pipeline


@dataclass
class SolveReport:
    x_float: StateVector
    x_fixed: StateVector
    k_fixed: np.ndarray
    success: Optional[bool]
    init_mode: str
    float_diag: Diagnostics
    fixed_diag: Diagnostics
    Q_k: np.ndarray = field(repr=False, default=None)

    @property
    def converged(self) -> bool:
        return self.float_diag.converged and self.fixed_diag.converged


def solve(data: HybridData, truth: Optional[StateVector] = None, rng=None, method: str = "gn") -> SolveReport:
    """Float solution, integer ambiguity resolution, fixed solution."""
    avail = assess(data.n_sat, data.L)
    if not avail.localizable:
        raise AvailabilityError(
            f"N={data.n_sat}, L={data.L} is not localizable "
            f"({avail.n_obs} observations < {avail.n_unknowns} unknowns)"
        )
    rng = np.random.default_rng() if rng is None else rng
    x0 = None
    mode = "rtk_float" if data.n_sat >= 4 else "fiveg"
    try:
        x0 = initialize(data, mode, rng)
    except AvailabilityError:
        if mode == "rtk_float" and data.L >= 1:
            mode = "fiveg"
            x0 = initialize(data, mode, rng)
        else:
            raise
    x_float, fdiag = solve_float_hybrid(data, x0, method)
    if data.n_k:
        k_hat, Qk = extract_ambiguity_covariance(data, x_float)
        k_fixed = ils.search(k_hat, Qk, 1)[0]
    else:
        Qk = np.zeros((0, 0))
        k_fixed = np.zeros(0, dtype=np.int64)
    x_fixed, xdiag = solve_fixed_hybrid(data, k_fixed, x_float, method)
    success = None
    if truth is not None:
        success = bool(np.array_equal(np.asarray(truth.k).astype(np.int64), k_fixed))
    return SolveReport(x_float, x_fixed, k_fixed, success, mode, fdiag, xdiag, Qk)
