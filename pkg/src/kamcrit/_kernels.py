"""Hot inner loops of the standard map.

Every kernel exists in two builds: a numba ``@njit`` version (used by
default whenever numba imports) and a numpy/python reference version.
Setting ``KAMCRIT_NUMBA=0`` in the environment before import forces the
reference path; :func:`backend` reports which one is active.  Both builds
are kept importable side by side in :data:`IMPLEMENTATIONS` so that
``benchmarks/bench_kernels.py`` and the test suite can compare them.

All kernels work on lifted (unwrapped) coordinates and never reduce to the
torus; callers wrap for display only.
"""

from __future__ import annotations

import math
import os

import numpy as np

__all__ = [
    "backend",
    "numba_available",
    "final_state",
    "trajectory",
    "batch_final_state",
    "batch_trajectory",
    "monodromy_product",
    "p_span",
    "max_p_deviation",
    "IMPLEMENTATIONS",
]


def _numba_requested() -> bool:
    value = os.environ.get("KAMCRIT_NUMBA", "1").strip().lower()
    return value not in ("0", "false", "off", "no")


# --------------------------------------------------------------------------
# reference builds
# --------------------------------------------------------------------------

def _final_state(q, p, k, nsteps):
    """Iterate the lifted standard map ``nsteps`` times from (q, p)."""
    for _ in range(nsteps):
        p = p + k * math.sin(q)
        q = q + p
    return q, p


def _trajectory(q, p, k, nsteps):
    """Lifted trajectory including the start point: shape (nsteps + 1, 2)."""
    out = np.empty((nsteps + 1, 2))
    out[0, 0] = q
    out[0, 1] = p
    for i in range(nsteps):
        p = p + k * math.sin(q)
        q = q + p
        out[i + 1, 0] = q
        out[i + 1, 1] = p
    return out


def _monodromy_product(qs, k):
    """Ordered tangent-map product DT(x_{n-1}) ... DT(x_0) along orbit angles.

    Returns (m11, m12, m21, m22, det_prod) where det_prod multiplies the
    per-factor determinants.  The factor determinant (1 + c) - c is exact to
    rounding, so det_prod tracks symplecticity without the catastrophic
    cancellation the accumulated matrix suffers for strongly unstable orbits.
    """
    m11 = 1.0
    m12 = 0.0
    m21 = 0.0
    m22 = 1.0
    det = 1.0
    for i in range(qs.shape[0]):
        c = k * math.cos(qs[i])
        a = 1.0 + c
        n11 = a * m11 + m21
        n12 = a * m12 + m22
        n21 = c * m11 + m21
        n22 = c * m12 + m22
        m11 = n11
        m12 = n12
        m21 = n21
        m22 = n22
        det *= a - c
    return m11, m12, m21, m22, det


def _p_span(q, p, k, nsteps):
    """(min p, max p) over the lifted trajectory, start point included."""
    pmin = p
    pmax = p
    for _ in range(nsteps):
        p = p + k * math.sin(q)
        q = q + p
        if p < pmin:
            pmin = p
        if p > pmax:
            pmax = p
    return pmin, pmax


def _max_p_deviation(q, p, k, nsteps, p_ref, cap):
    """Max |p - p_ref| along the trajectory, stopping early past ``cap``.

    Returns (deviation, steps_done, escaped).  ``cap <= 0`` disables the
    escape check.
    """
    best = abs(p - p_ref)
    for i in range(nsteps):
        p = p + k * math.sin(q)
        q = q + p
        dev = abs(p - p_ref)
        if dev > best:
            best = dev
        if cap > 0.0 and best >= cap:
            return best, i + 1, True
    return best, nsteps, False


def _batch_final_state_loops(qs, ps, k, nsteps):
    """Loop build of the batched iteration (numba source)."""
    nb = qs.shape[0]
    out_q = np.empty(nb)
    out_p = np.empty(nb)
    for j in range(nb):
        q = qs[j]
        p = ps[j]
        for _ in range(nsteps):
            p = p + k * math.sin(q)
            q = q + p
        out_q[j] = q
        out_p[j] = p
    return out_q, out_p


def _batch_trajectory_loops(qs, ps, k, nsteps):
    """Loop build of the batched trajectory (numba source)."""
    nb = qs.shape[0]
    out = np.empty((nb, nsteps + 1, 2))
    for j in range(nb):
        q = qs[j]
        p = ps[j]
        out[j, 0, 0] = q
        out[j, 0, 1] = p
        for i in range(nsteps):
            p = p + k * math.sin(q)
            q = q + p
            out[j, i + 1, 0] = q
            out[j, i + 1, 1] = p
    return out


def _batch_final_state_np(qs, ps, k, nsteps):
    """Vectorised fallback: numpy over the batch, python over the steps."""
    q = np.array(qs, dtype=float)
    p = np.array(ps, dtype=float)
    for _ in range(nsteps):
        p += k * np.sin(q)
        q += p
    return q, p


def _batch_trajectory_np(qs, ps, k, nsteps):
    q = np.array(qs, dtype=float)
    p = np.array(ps, dtype=float)
    out = np.empty((q.shape[0], nsteps + 1, 2))
    out[:, 0, 0] = q
    out[:, 0, 1] = p
    for i in range(nsteps):
        p += k * np.sin(q)
        q += p
        out[:, i + 1, 0] = q
        out[:, i + 1, 1] = p
    return out


_REFERENCE = {
    "final_state": _final_state,
    "trajectory": _trajectory,
    "batch_final_state": _batch_final_state_np,
    "batch_trajectory": _batch_trajectory_np,
    "monodromy_product": _monodromy_product,
    "p_span": _p_span,
    "max_p_deviation": _max_p_deviation,
}

_NUMBA = None
if _numba_requested():
    try:
        from numba import njit
    except ImportError:  # stays importable without numba
        njit = None
    if njit is not None:
        _jit = njit(cache=True)
        _NUMBA = {
            "final_state": _jit(_final_state),
            "trajectory": _jit(_trajectory),
            "batch_final_state": _jit(_batch_final_state_loops),
            "batch_trajectory": _jit(_batch_trajectory_loops),
            "monodromy_product": _jit(_monodromy_product),
            "p_span": _jit(_p_span),
            "max_p_deviation": _jit(_max_p_deviation),
        }

IMPLEMENTATIONS = {"numpy": _REFERENCE, "numba": _NUMBA}

_ACTIVE = _NUMBA if _NUMBA is not None else _REFERENCE
_BACKEND = "numba" if _NUMBA is not None else "numpy"

final_state = _ACTIVE["final_state"]
trajectory = _ACTIVE["trajectory"]
batch_final_state = _ACTIVE["batch_final_state"]
batch_trajectory = _ACTIVE["batch_trajectory"]
monodromy_product = _ACTIVE["monodromy_product"]
p_span = _ACTIVE["p_span"]
max_p_deviation = _ACTIVE["max_p_deviation"]


def backend() -> str:
    """Name of the active kernel build: ``"numba"`` or ``"numpy"``."""
    return _BACKEND


def numba_available() -> bool:
    return _NUMBA is not None
