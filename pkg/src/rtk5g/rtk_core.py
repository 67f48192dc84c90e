"""Standalone RTK: float solution, conditional (fixed) solution, cost decomposition."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg
from scipy.linalg import lapack

from .errors import DimensionError, NumericalError, RankDeficiencyError
from .observation import DdObservations

RCOND_MIN = 1e-12


@dataclass
class FloatSolution:
    p_hat: np.ndarray
    k_hat: np.ndarray
    Q_p: np.ndarray
    Q_k: np.ndarray
    Q_pk: np.ndarray
    origin: Optional[np.ndarray] = None  # p_hat = origin + offset, kept for precision
    offset: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.origin is None:
            self.origin = np.zeros(3)
            self.offset = np.asarray(self.p_hat, dtype=float).copy()

    @property
    def Q(self) -> np.ndarray:
        return np.block([[self.Q_p, self.Q_pk], [self.Q_pk.T, self.Q_k]])


def spd_factor(M, what="normal matrix", rcond_min=None):
    """Cholesky factor of an SPD matrix; raises on reciprocal condition < ``rcond_min`` (1e-12)."""
    rcond_min = RCOND_MIN if rcond_min is None else rcond_min
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    c, info = lapack.dpotrf(M, lower=1, clean=1)
    if info == 0:
        rcond, info2 = lapack.dpocon(c, np.linalg.norm(M, 1), uplo="L")
        if info2 == 0 and rcond >= rcond_min:
            return c
    else:
        rcond = 0.0
    rank = int(np.linalg.matrix_rank(M, tol=rcond_min * np.abs(M).max() * n))
    raise RankDeficiencyError(
        f"{what} ({n}x{n}) is singular: numerical rank {rank} < {n} (rcond {rcond:.1e})",
        size=n, rank=rank,
    )


def solve_float_rtk(obs: DdObservations, W1) -> FloatSolution:
    """Weighted LS over ``[p_u; k]`` ignoring integrality.

    The normal equations are formed in the base-relative unknown
    ``p_u - p_b``; this is algebraically the ``y1 + b`` right-hand side but
    avoids cancelling ~6e6 m ECEF magnitudes.
    """
    W1 = np.asarray(W1, dtype=float)
    M = np.hstack([obs.B, obs.C])
    n = M.shape[1]
    if W1.shape != (M.shape[0], M.shape[0]):
        raise DimensionError("W1 does not match the DD observation count")
    Nm = M.T @ W1 @ M
    c = spd_factor(Nm, "RTK normal matrix")
    rhs = M.T @ W1 @ obs.y1
    sol = linalg.cho_solve((c, True), rhs)
    Q = linalg.cho_solve((c, True), np.eye(n))
    Q = 0.5 * (Q + Q.T)
    return FloatSolution(
        p_hat=obs.p_b + sol[:3],
        k_hat=sol[3:],
        Q_p=Q[:3, :3],
        Q_k=Q[3:, 3:],
        Q_pk=Q[:3, 3:],
        origin=obs.p_b.copy(),
        offset=sol[:3].copy(),
    )


def _conditional_offset(fs: FloatSolution, k):
    k = np.asarray(k, dtype=float)
    if k.shape != fs.k_hat.shape:
        raise DimensionError("ambiguity vector has the wrong length")
    try:
        cf = linalg.cho_factor(fs.Q_k, lower=True)
    except linalg.LinAlgError as exc:
        raise NumericalError("ambiguity covariance is singular") from exc
    off = fs.offset - fs.Q_pk @ linalg.cho_solve(cf, fs.k_hat - k)
    Qp = fs.Q_p - fs.Q_pk @ linalg.cho_solve(cf, fs.Q_pk.T)
    return off, 0.5 * (Qp + Qp.T)


def conditional_solution(fs: FloatSolution, k):
    """Position conditioned on ambiguities ``k`` and its covariance."""
    off, Qp = _conditional_offset(fs, k)
    return fs.origin + off, Qp


def rtk_cost(obs: DdObservations, W1, p, k) -> float:
    """``||y1 - B p - C k + b||^2_{W1}``."""
    r = obs.residual(p, k)
    return float(r @ np.asarray(W1) @ r)


def cost_decomposition(obs: DdObservations, W1, fs: FloatSolution, k, p):
    """Split the RTK cost at (k, p) into float residual, ambiguity and position terms."""
    k = np.asarray(k, dtype=float)
    W1 = np.asarray(W1, dtype=float)
    # everything relative to the float solution's origin (the base)
    rel = np.asarray(p, dtype=float) - fs.origin
    shift = fs.origin - obs.p_b
    hd = obs.H @ (fs.offset + shift)
    r = np.concatenate([obs.p - hd, obs.phi - hd - obs.wavelength * fs.k_hat])
    term1 = float(r @ W1 @ r)
    dk = fs.k_hat - k
    term2 = float(dk @ linalg.solve(fs.Q_k, dk, assume_a="pos"))
    off_k, Q_cond = _conditional_offset(fs, k)
    dp = off_k - rel
    term3 = float(dp @ linalg.solve(Q_cond, dp, assume_a="pos"))
    return term1, term2, term3
