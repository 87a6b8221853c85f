"""Batched step-count kernels for the experiment loops.

Two interchangeable backends compute identical step counts: a numba
``@njit`` per-target loop and a vectorized numpy sweep. The numba backend
is used when numba imports and ``BBS_DISABLE_NUMBA`` is unset (or ``0``);
set ``BBS_DISABLE_NUMBA=1`` to force the numpy path.

Both kernels follow the traced searches in :mod:`bbsearch.search` exactly
(bracket check before probing, floor midpoint, half-down median rounding
clamped to the open bracket, sticky uniform fallback once the prior has no
mass on the bracket) but record only step counts.

The probe cap from :func:`max_probes` is enforced constructively: a search
whose remaining budget only just covers plain halving of the current
bracket switches to floor midpoints, so a badly placed prior (whose
median creeps down a steep tail) still terminates within the cap.
"""

from __future__ import annotations

import math
import os

import numpy as np

from bbsearch.kernels import _numpy

__all__ = ["BACKEND", "backend_module", "classic_steps", "bbs_steps", "halvings", "max_probes"]


def _numba_wanted() -> bool:
    return os.environ.get("BBS_DISABLE_NUMBA", "").strip().lower() in ("", "0", "false", "no")


def backend_module(name: str):
    """Return the kernel module for ``"numba"`` or ``"numpy"``."""
    if name == "numpy":
        return _numpy
    if name == "numba":
        from bbsearch.kernels import _numba

        return _numba
    raise ValueError(f"unknown kernel backend {name!r}")


BACKEND = "numpy"
_impl = _numpy
if _numba_wanted():
    try:
        _impl = backend_module("numba")
        BACKEND = "numba"
    except ImportError:
        pass


def halvings(width: int, eps: int) -> int:
    """Worst-case probes floor-midpoint search needs to bring ``width`` to ``eps``."""
    n = 0
    while width > eps:
        width = (width + 1) // 2
        n += 1
    return n


def max_probes(width, eps) -> int:
    """Hard cap on probes for one search over ``width`` at tolerance ``eps``."""
    if width <= eps:
        return 0
    return math.ceil(math.log2(width / eps)) + 2 * math.ceil(math.log2(width))


def _as_arrays(low, high, targets):
    targets = np.ascontiguousarray(targets, dtype=np.int64)
    lo = np.ascontiguousarray(np.broadcast_to(np.asarray(low, dtype=np.int64), targets.shape))
    hi = np.ascontiguousarray(np.broadcast_to(np.asarray(high, dtype=np.int64), targets.shape))
    if np.any(hi <= lo):
        raise ValueError("every bracket needs low < high")
    return lo, hi, targets


def _check_eps(eps) -> int:
    eps = int(eps)
    if eps < 1:
        raise ValueError(f"epsilon must be >= 1, got {eps}")
    return eps


def classic_steps(low, high, targets, eps, *, backend: str | None = None) -> np.ndarray:
    """Probe counts of floor-midpoint binary search for each target."""
    impl = backend_module(backend) if backend else _impl
    lo, hi, t = _as_arrays(low, high, targets)
    return impl.classic_steps(lo, hi, t, _check_eps(eps))


def bbs_steps(low, high, targets, eps, prior, *, backend: str | None = None):
    """Probe counts of median-split search under ``prior``.

    Returns
    -------
    steps : ndarray of int64
    exhausted : ndarray of bool
        True where the prior ran out of mass (or the probe budget forced
        plain halving) and the search fell back to uniform splitting.
    """
    impl = backend_module(backend) if backend else _impl
    lo, hi, t = _as_arrays(low, high, targets)
    eps = _check_eps(eps)
    kind, p0, p1, p2 = prior.kernel_params()
    p0, p1, p2 = (np.ascontiguousarray(p, dtype=np.float64) for p in (p0, p1, p2))
    width = (hi - lo).astype(np.float64)
    cap = np.where(
        width > eps, np.ceil(np.log2(width / eps)) + 2 * np.ceil(np.log2(width)), 0
    ).astype(np.int64)
    steps, exhausted = impl.bbs_steps(lo, hi, t, eps, int(kind), p0, p1, p2, cap)
    if np.any(steps < 0):
        raise RuntimeError("search exceeded its probe cap; the prior violates the progress guarantee")
    return steps, exhausted
