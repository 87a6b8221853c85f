"""Compiled per-target search loops."""

import math

import numpy as np
from numba import njit

SQRT2 = math.sqrt(2.0)
MIN_MASS = 1e-300


@njit(cache=True)
def _segment(za, zb):
    if za > 0.0:
        return 0.5 * math.erfc(za / SQRT2) - 0.5 * math.erfc(zb / SQRT2)
    return 0.5 * math.erfc(-zb / SQRT2) - 0.5 * math.erfc(-za / SQRT2)


@njit(cache=True)
def _mass(kind, p0, p1, p2, a, b):
    if b <= a:
        return 0.0
    if kind == 0:
        lo = max(a, p0[0])
        hi = min(b, p1[0])
        return max(hi - lo, 0.0) / (p1[0] - p0[0])
    if kind == 1:
        total = 0.0
        for i in range(p0.shape[0]):
            total += p2[i] * _segment((a - p0[i]) / p1[i], (b - p0[i]) / p1[i])
        return total
    if kind == 2:
        a = max(a, 0.0)
        b = max(b, 0.0)
        if b <= a:
            return 0.0
        return math.exp(-a / p1[0]) * -math.expm1(-(b - a) / p1[0])
    return max(np.interp(b, p0, p2) - np.interp(a, p0, p2), 0.0)


@njit(cache=True)
def _hist_median(edges, cum, lo, hi, total):
    # invert the piecewise-linear CDF directly; bisection on masses can miss exact half-integer ties
    c = np.interp(float(lo), edges, cum) + 0.5 * total
    j = min(max(np.searchsorted(cum, c), 1), edges.shape[0] - 1)
    frac = 0.0 if cum[j] <= cum[j - 1] else (c - cum[j - 1]) / (cum[j] - cum[j - 1])
    x = edges[j - 1] + frac * (edges[j] - edges[j - 1])
    x = min(max(x, float(lo)), float(hi))
    return np.int64(math.ceil(x - 0.5))


@njit(cache=True)
def _probe(kind, p0, p1, p2, lo, hi):
    """Quantized, clamped bracket median; flag set when the bracket has no mass."""
    if kind == 0:
        a = max(float(lo), p0[0])
        b = min(float(hi), p1[0])
        if b <= a:
            return (lo + hi) // 2, True
        m = np.int64(math.ceil(a + 0.5 * (b - a) - 0.5))
    else:
        total = _mass(kind, p0, p1, p2, float(lo), float(hi))
        if not total > MIN_MASS:
            return (lo + hi) // 2, True
        if kind == 3:
            m = _hist_median(p0, p2, lo, hi, total)
            return min(max(m, lo + 1), hi - 1), False
        half = 0.5 * total
        left = lo
        right = hi
        # smallest m with mass(lo, m + 1/2) >= half, i.e. the median rounded half-down
        while left < right:
            mid = (left + right) // 2
            if _mass(kind, p0, p1, p2, float(lo), mid + 0.5) >= half:
                right = mid
            else:
                left = mid + 1
        m = left
    return min(max(m, lo + 1), hi - 1), False


@njit(cache=True)
def _halvings(width, eps):
    n = 0
    while width > eps:
        width = (width + 1) // 2
        n += 1
    return n


@njit(cache=True)
def classic_steps(lo_arr, hi_arr, targets, eps):
    n = targets.shape[0]
    steps = np.zeros(n, dtype=np.int64)
    for i in range(n):
        lo = lo_arr[i]
        hi = hi_arr[i]
        t = targets[i]
        s = 0
        while hi - lo > eps:
            m = (lo + hi) // 2
            s += 1
            if m > t:
                hi = m
            else:
                lo = m
        steps[i] = s
    return steps


@njit(cache=True)
def bbs_steps(lo_arr, hi_arr, targets, eps, kind, p0, p1, p2, max_steps):
    n = targets.shape[0]
    steps = np.zeros(n, dtype=np.int64)
    exhausted = np.zeros(n, dtype=np.bool_)
    for i in range(n):
        lo = lo_arr[i]
        hi = hi_arr[i]
        t = targets[i]
        s = 0
        uniform = False
        while hi - lo > eps:
            if s >= max_steps[i]:
                s = -1
                break
            if not uniform and s + _halvings(hi - lo, eps) >= max_steps[i]:
                uniform = True
                exhausted[i] = True
            if uniform:
                m = (lo + hi) // 2
            else:
                m, empty = _probe(kind, p0, p1, p2, lo, hi)
                if empty:
                    uniform = True
                    exhausted[i] = True
            s += 1
            if m > t:
                hi = m
            else:
                lo = m
        steps[i] = s
    return steps, exhausted
