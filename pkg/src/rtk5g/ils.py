"""
Integer least squares, LAMBDA style.

``Q = L^T D L`` (L unit lower triangular), decorrelated by integer Gauss
transforms and symmetric permutations (``Z`` accumulates them, ``z = Z^T a``),
then a shrinking-ellipsoid depth-first search in the decorrelated space.
Results are mapped back with ``Z^{-T}`` and re-scored in the original metric.

The three loop kernels are numba-compiled unless ``RTK5G_DISABLE_NUMBA`` is
set, in which case the same code runs as plain Python.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from ._accel import njit
from .errors import DimensionError, NumericalError

# swap tolerance of the reduction; avoids cycling on near-equal conditionals
_SWAP_EPS = 1e-6


@njit
def _ltdl_kernel(Q):
    n = Q.shape[0]
    A = Q.copy()
    Lm = np.zeros((n, n))
    d = np.zeros(n)
    for i in range(n - 1, -1, -1):
        d[i] = A[i, i]
        if not d[i] > 0.0:
            return Lm, d, i
        a = math.sqrt(d[i])
        for j in range(i + 1):
            Lm[i, j] = A[i, j] / a
        for j in range(i):
            for k in range(j + 1):
                A[j, k] -= Lm[i, k] * Lm[i, j]
        for j in range(i + 1):
            Lm[i, j] /= Lm[i, i]
    return Lm, d, -1


@njit
def _gauss(Lm, Z, i, j):
    n = Lm.shape[0]
    mu = math.floor(Lm[i, j] + 0.5)
    if mu != 0.0:
        for k in range(i, n):
            Lm[k, j] -= mu * Lm[k, i]
        for k in range(n):
            Z[k, j] -= mu * Z[k, i]


@njit
def _perm(Lm, d, j, delta, Z):
    n = Lm.shape[0]
    eta = d[j] / delta
    lam = d[j + 1] * Lm[j + 1, j] / delta
    d[j] = eta * d[j + 1]
    d[j + 1] = delta
    for k in range(j):
        a0 = Lm[j, k]
        a1 = Lm[j + 1, k]
        Lm[j, k] = -Lm[j + 1, j] * a0 + a1
        Lm[j + 1, k] = eta * a0 + lam * a1
    Lm[j + 1, j] = lam
    for k in range(j + 2, n):
        tmp = Lm[k, j]
        Lm[k, j] = Lm[k, j + 1]
        Lm[k, j + 1] = tmp
    for k in range(n):
        tmp = Z[k, j]
        Z[k, j] = Z[k, j + 1]
        Z[k, j + 1] = tmp


@njit
def _reduction_kernel(Lm, d, Z):
    n = Lm.shape[0]
    j = n - 2
    k = n - 2
    while j >= 0:
        if j <= k:
            for i in range(j + 1, n):
                _gauss(Lm, Z, i, j)
        delta = d[j] + Lm[j + 1, j] ** 2 * d[j + 1]
        if delta + _SWAP_EPS < d[j + 1]:
            _perm(Lm, d, j, delta, Z)
            k = j
            j = n - 2
        else:
            j -= 1
    # final full size reduction so every |L[i, j]| <= 1/2
    for j in range(n - 2, -1, -1):
        for i in range(j + 1, n):
            _gauss(Lm, Z, i, j)


@njit
def _sgn(x):
    return -1.0 if x <= 0.0 else 1.0


@njit
def _search_kernel(Lm, d, zs, m):
    n = Lm.shape[0]
    S = np.zeros((n, n))
    dist = np.zeros(n)
    zb = np.zeros(n)
    z = np.zeros(n)
    step = np.zeros(n)
    zn = np.zeros((m, n))
    s = np.zeros(m)
    nn = 0
    imax = 0
    maxdist = np.inf

    k = n - 1
    zb[k] = zs[k]
    z[k] = math.floor(zb[k] + 0.5)
    y = zb[k] - z[k]
    step[k] = _sgn(y)
    while True:
        newdist = dist[k] + y * y / d[k]
        if newdist < maxdist:
            if k != 0:
                k -= 1
                dist[k] = newdist
                for i in range(k + 1):
                    S[k, i] = S[k + 1, i] + (z[k + 1] - zb[k + 1]) * Lm[k + 1, i]
                zb[k] = zs[k] + S[k, k]
                z[k] = math.floor(zb[k] + 0.5)
                y = zb[k] - z[k]
                step[k] = _sgn(y)
            else:
                if nn < m:
                    if nn == 0 or newdist > s[imax]:
                        imax = nn
                    zn[nn, :] = z
                    s[nn] = newdist
                    nn += 1
                    if nn == m:
                        maxdist = s[imax]
                else:
                    if newdist < s[imax]:
                        zn[imax, :] = z
                        s[imax] = newdist
                        imax = 0
                        for i in range(1, m):
                            if s[i] > s[imax]:
                                imax = i
                    maxdist = s[imax]
                z[0] += step[0]
                y = zb[0] - z[0]
                step[0] = -step[0] - _sgn(step[0])
        else:
            if k == n - 1:
                break
            k += 1
            z[k] += step[k]
            y = zb[k] - z[k]
            step[k] = -step[k] - _sgn(step[k])
    return zn[:nn], s[:nn]


def _as_spd(Q):
    Q = np.array(Q, dtype=np.float64, ndmin=2)
    if Q.shape[0] != Q.shape[1]:
        raise DimensionError(f"covariance must be square, got {Q.shape}")
    return np.ascontiguousarray(0.5 * (Q + Q.T))


def ltdl(Q):
    """Factor ``Q = L^T D L``; returns ``(L, D)`` with D as a diagonal matrix."""
    Q = _as_spd(Q)
    Lm, d, bad = _ltdl_kernel(Q)
    if bad >= 0:
        raise NumericalError(f"matrix is not positive definite (pivot {bad} = {d[bad]:.3e})")
    return Lm, np.diag(d)


@dataclass
class Decorrelation:
    Z: np.ndarray  # integer, unimodular; z = Z^T a
    Q_transformed: np.ndarray  # Z^T Q Z
    L: np.ndarray
    D: np.ndarray

    @property
    def d(self):
        return np.diag(self.D)


def decorrelate(Q) -> Decorrelation:
    Q = _as_spd(Q)
    n = Q.shape[0]
    Lm, d, bad = _ltdl_kernel(Q)
    if bad >= 0:
        raise NumericalError(f"matrix is not positive definite (pivot {bad} = {d[bad]:.3e})")
    Zf = np.eye(n)
    _reduction_kernel(Lm, d, Zf)
    Z = np.rint(Zf).astype(np.int64)
    Qz = Z.T @ Q @ Z
    return Decorrelation(Z, 0.5 * (Qz + Qz.T), Lm, np.diag(d))


def ils_cost(k_hat, Q, k) -> np.ndarray:
    """``(k_hat - k)^T Q^{-1} (k_hat - k)`` for one vector or rows of ``k``."""
    k = np.asarray(k, dtype=float)
    r = (np.asarray(k_hat, dtype=float) - np.atleast_2d(k)).T
    cf = linalg.cho_factor(_as_spd(Q), lower=True)
    cost = np.einsum("ij,ij->j", r, linalg.cho_solve(cf, r))
    return cost if k.ndim == 2 else float(cost[0])


def _ordered(cands, costs):
    order = sorted(range(len(cands)), key=lambda i: (costs[i], tuple(cands[i])))
    return [cands[i] for i in order], [float(costs[i]) for i in order]


def search(k_hat, Q, n_best: int = 1, return_costs: bool = False):
    """The ``n_best`` integer vectors minimizing ``||k_hat - k||^2_{Q^-1}``, ascending.

    Ties in cost are broken by lexicographic order of the integer vector.
    """
    if n_best < 1:
        raise ValueError("n_best must be >= 1")
    k_hat = np.asarray(k_hat, dtype=float).reshape(-1)
    Q = _as_spd(Q)
    n = len(k_hat)
    if Q.shape[0] != n:
        raise DimensionError("k_hat and Q dimensions differ")
    if n == 0:
        out = [np.zeros(0, dtype=np.int64)]
        return (out, [0.0]) if return_costs else out
    dec = decorrelate(Q)
    # shift to a small fractional part so the search works near the origin
    shift = np.floor(k_hat)
    zs = dec.Z.T @ (k_hat - shift)
    zn, _ = _search_kernel(np.ascontiguousarray(dec.L), np.diag(dec.D).copy(), zs, n_best)
    # a = Z^{-T} z
    Zinv_T = np.rint(np.linalg.inv(dec.Z.astype(float)).T)
    cands = np.rint(zn @ Zinv_T.T).astype(np.int64) + shift.astype(np.int64)
    costs = ils_cost(k_hat, Q, cands)
    cands, costs = _ordered(list(cands), list(costs))
    return (cands, costs) if return_costs else cands


def brute_force_ils(k_hat, Q, radius: int = 6):
    """Exhaustive ILS over the box ``round(k_hat) +/- radius`` (dimension <= 6)."""
    k_hat = np.asarray(k_hat, dtype=float).reshape(-1)
    n = len(k_hat)
    if n > 6:
        raise ValueError(f"brute force limited to dimension <= 6, got {n}")
    Q = _as_spd(Q)
    Qinv = np.linalg.inv(Q)
    center = np.rint(k_hat).astype(np.int64)
    offsets = np.arange(-radius, radius + 1)
    best, best_cost = None, np.inf
    # chunk along the first axis to bound memory
    rest = np.array(list(itertools.product(offsets, repeat=n - 1)), dtype=np.int64).reshape(len(offsets) ** (n - 1), n - 1)
    for o0 in offsets:
        block = np.hstack([np.full((len(rest), 1), o0, dtype=np.int64), rest]) + center
        r = k_hat - block
        cost = np.einsum("ij,jk,ik->i", r, Qinv, r)
        i = int(np.argmin(cost))
        c = cost[i]
        ties = np.flatnonzero(cost == c)
        if len(ties) > 1:
            i = min(ties, key=lambda t: tuple(block[t]))
        if c < best_cost or (c == best_cost and tuple(block[i]) < tuple(best)):
            best, best_cost = block[i].copy(), c
    return best
