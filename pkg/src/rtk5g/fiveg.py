"""5G angle-of-departure / delay geometry kernels.

The model is evaluated in range units: the delay row is ``c * tau = d + c*Delta``
so that all unknowns (position and ``c*Delta``) are in meters.  Rows are
stacked as ``[az_1..az_L, el_1..el_L, r_1..r_L]``; Jacobian columns are
``[dp_x, dp_y, dp_z, d(c*Delta)]``.

Two implementations share one contract: a numba loop kernel and a vectorized
numpy version.  :func:`model_and_jacobian` dispatches to the numba kernel
unless acceleration is disabled (see :mod:`rtk5g._accel`).
"""

import math

import numpy as np

from ._accel import USE_NUMBA, njit
from .errors import DomainError

# |sin el| above this is treated as the gimbal point of the (az, el) chart
_GIMBAL = 1.0 - 1e-14


@njit
def _model_jacobian_loops(p, bs_pos, bs_rot, cdelta):
    L = bs_pos.shape[0]
    y = np.empty(3 * L)
    J = np.zeros((3 * L, 4))
    bad = -1
    for l in range(L):
        v0 = p[0] - bs_pos[l, 0]
        v1 = p[1] - bs_pos[l, 1]
        v2 = p[2] - bs_pos[l, 2]
        R = bs_rot[l]
        # t = R^T v  (direction in the BS frame)
        t0 = R[0, 0] * v0 + R[1, 0] * v1 + R[2, 0] * v2
        t1 = R[0, 1] * v0 + R[1, 1] * v1 + R[2, 1] * v2
        t2 = R[0, 2] * v0 + R[1, 2] * v1 + R[2, 2] * v2
        d = math.sqrt(v0 * v0 + v1 * v1 + v2 * v2)
        rho2 = t0 * t0 + t1 * t1
        if d == 0.0 or rho2 == 0.0 or abs(t2 / d) >= _GIMBAL:
            bad = l
            break
        y[l] = math.atan2(t1, t0)
        y[L + l] = math.asin(min(1.0, max(-1.0, t2 / d)))
        y[2 * L + l] = d + cdelta
        s2 = 1.0 / math.sqrt(1.0 - (t2 / d) ** 2)
        for i in range(3):
            # d az/dp = (t0 R[:,1] - t1 R[:,0]) / (t0^2 + t1^2)
            J[l, i] = (t0 * R[i, 1] - t1 * R[i, 0]) / rho2
        J[L + l, 0] = s2 * (R[0, 2] / d - t2 * v0 / d**3)
        J[L + l, 1] = s2 * (R[1, 2] / d - t2 * v1 / d**3)
        J[L + l, 2] = s2 * (R[2, 2] / d - t2 * v2 / d**3)
        J[2 * L + l, 0] = v0 / d
        J[2 * L + l, 1] = v1 / d
        J[2 * L + l, 2] = v2 / d
        J[2 * L + l, 3] = 1.0
    return y, J, bad


def _model_jacobian_numpy(p, bs_pos, bs_rot, cdelta):
    L = bs_pos.shape[0]
    v = p[None, :] - bs_pos  # (L, 3)
    t = np.einsum("lji,lj->li", bs_rot, v)  # R^T v
    d = np.sqrt(np.einsum("li,li->l", v, v))
    rho2 = t[:, 0] ** 2 + t[:, 1] ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        sing = (d == 0.0) | (rho2 == 0.0) | ~(np.abs(t[:, 2] / d) < _GIMBAL)
    if np.any(sing):
        return None, None, int(np.flatnonzero(sing)[0])
    y = np.concatenate([
        np.arctan2(t[:, 1], t[:, 0]),
        np.arcsin(np.clip(t[:, 2] / d, -1.0, 1.0)),
        d + cdelta,
    ])
    s2 = 1.0 / np.sqrt(1.0 - (t[:, 2] / d) ** 2)
    J = np.zeros((3 * L, 4))
    J[:L, :3] = (t[:, 0, None] * bs_rot[:, :, 1] - t[:, 1, None] * bs_rot[:, :, 0]) / rho2[:, None]
    J[L:2 * L, :3] = s2[:, None] * (bs_rot[:, :, 2] / d[:, None] - t[:, 2, None] * v / d[:, None] ** 3)
    J[2 * L:, :3] = v / d[:, None]
    J[2 * L:, 3] = 1.0
    return y, J, -1


def _prepare(p, bs_pos, bs_rot):
    p = np.ascontiguousarray(p, dtype=np.float64)
    bs_pos = np.ascontiguousarray(bs_pos, dtype=np.float64).reshape(-1, 3)
    bs_rot = np.ascontiguousarray(bs_rot, dtype=np.float64).reshape(-1, 3, 3)
    return p, bs_pos, bs_rot


def model_and_jacobian(p, bs_pos, bs_rot, cdelta=0.0):
    """Noise-free ``[az, el, c*tau]`` stack and its Jacobian at ``p``.

    Raises DomainError at the gimbal point (user on a BS frame's z axis) or
    when the user coincides with a BS; the angle Jacobian is undefined there.
    """
    p, bs_pos, bs_rot = _prepare(p, bs_pos, bs_rot)
    kernel = _model_jacobian_loops if USE_NUMBA else _model_jacobian_numpy
    y, J, bad = kernel(p, bs_pos, bs_rot, float(cdelta))
    if bad >= 0:
        raise DomainError(f"5G BS {bad}: user on the frame z axis or at the BS; angle Jacobian undefined")
    return y, J


def model(p, bs_pos, bs_rot, cdelta=0.0):
    """Noise-free ``[az, el, c*tau]`` stack (defined everywhere except at a BS)."""
    p, bs_pos, bs_rot = _prepare(p, bs_pos, bs_rot)
    v = p[None, :] - bs_pos
    t = np.einsum("lji,lj->li", bs_rot, v)
    d = np.sqrt(np.einsum("li,li->l", v, v))
    if np.any(d == 0.0):
        raise DomainError("user coincides with a 5G base station")
    return np.concatenate([
        np.arctan2(t[:, 1], t[:, 0]),
        np.arcsin(np.clip(t[:, 2] / d, -1.0, 1.0)),
        d + float(cdelta),
    ])


def direction_in_frame(az, el):
    """Unit vector ``(cos az cos el, sin az cos el, sin el)`` (rows for arrays)."""
    az = np.asarray(az, dtype=float)
    el = np.asarray(el, dtype=float)
    return np.stack([np.cos(az) * np.cos(el), np.sin(az) * np.cos(el), np.sin(el)], axis=-1)


def wrap_angle(a):
    """Wrap to (-pi, pi]."""
    w = np.mod(np.asarray(a, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    return np.where(w == -np.pi, np.pi, w)
