"""Vectorized fallback: every active target advances one probe per sweep."""

import numpy as np
from scipy.special import erfc

SQRT2 = np.sqrt(2.0)
MIN_MASS = 1e-300


def _segment(za, zb):
    upper = 0.5 * erfc(za / SQRT2) - 0.5 * erfc(zb / SQRT2)
    lower = 0.5 * erfc(-zb / SQRT2) - 0.5 * erfc(-za / SQRT2)
    return np.where(za > 0.0, upper, lower)


def _mass(kind, p0, p1, p2, a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if kind == 0:
        lo = np.maximum(a, p0[0])
        hi = np.minimum(b, p1[0])
        out = np.maximum(hi - lo, 0.0) / (p1[0] - p0[0])
    elif kind == 1:
        za = (a[:, None] - p0) / p1
        zb = (b[:, None] - p0) / p1
        out = _segment(za, zb) @ p2
    elif kind == 2:
        a = np.maximum(a, 0.0)
        b = np.maximum(b, 0.0)
        out = np.exp(-a / p1[0]) * -np.expm1(-(b - a) / p1[0])
    else:
        out = np.maximum(np.interp(b, p0, p2) - np.interp(a, p0, p2), 0.0)
    return np.where(b > a, out, 0.0)


def _hist_median(edges, cum, lo, hi, total):
    c = np.interp(lo.astype(float), edges, cum) + 0.5 * total
    j = np.clip(np.searchsorted(cum, c), 1, len(edges) - 1)
    lo_c, hi_c = cum[j - 1], cum[j]
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(hi_c <= lo_c, 0.0, (c - lo_c) / (hi_c - lo_c))
    x = np.clip(edges[j - 1] + frac * (edges[j] - edges[j - 1]), lo, hi)
    return np.ceil(x - 0.5).astype(np.int64)


def _probe(kind, p0, p1, p2, lo, hi):
    if kind == 0:
        a = np.maximum(lo.astype(float), p0[0])
        b = np.minimum(hi.astype(float), p1[0])
        empty = b <= a
        m = np.ceil(a + 0.5 * (b - a) - 0.5).astype(np.int64)
    else:
        total = _mass(kind, p0, p1, p2, lo, hi)
        empty = ~(total > MIN_MASS)
        if kind == 3:
            m = np.clip(_hist_median(p0, p2, lo, hi, total), lo + 1, hi - 1)
            return np.where(empty, (lo + hi) // 2, m), empty
        half = 0.5 * total
        left = lo.copy()
        right = hi.copy()
        open_ = left < right
        while open_.any():
            mid = (left + right) // 2
            ok = _mass(kind, p0, p1, p2, lo, mid + 0.5) >= half
            right = np.where(open_ & ok, mid, right)
            left = np.where(open_ & ~ok, mid + 1, left)
            open_ = left < right
        m = left
    m = np.clip(m, lo + 1, hi - 1)
    return np.where(empty, (lo + hi) // 2, m), empty


def _halvings(width, eps):
    width = width.copy()
    n = np.zeros(len(width), dtype=np.int64)
    more = width > eps
    while more.any():
        n += more
        width = np.where(more, (width + 1) // 2, width)
        more = width > eps
    return n


def classic_steps(lo_arr, hi_arr, targets, eps):
    lo = lo_arr.copy()
    hi = hi_arr.copy()
    steps = np.zeros(len(targets), dtype=np.int64)
    active = hi - lo > eps
    while active.any():
        mid = (lo + hi) // 2
        up = active & (mid > targets)
        down = active & ~(mid > targets)
        hi = np.where(up, mid, hi)
        lo = np.where(down, mid, lo)
        steps += active
        active = hi - lo > eps
    return steps


def bbs_steps(lo_arr, hi_arr, targets, eps, kind, p0, p1, p2, max_steps):
    lo = lo_arr.copy()
    hi = hi_arr.copy()
    n = len(targets)
    steps = np.zeros(n, dtype=np.int64)
    exhausted = np.zeros(n, dtype=bool)
    active = hi - lo > eps
    while active.any():
        idx = np.flatnonzero(active)
        over = steps[idx] >= max_steps[idx]
        if over.any():
            steps[idx[over]] = -1
            idx = idx[~over]
            if idx.size == 0:
                break
        l, h, t = lo[idx], hi[idx], targets[idx]
        budget = steps[idx] + _halvings(h - l, eps) >= max_steps[idx]
        exhausted[idx] |= budget
        m, empty = _probe(kind, p0, p1, p2, l, h)
        gone = exhausted[idx] | empty
        exhausted[idx] = gone
        m = np.where(gone, (l + h) // 2, m)
        up = m > t
        hi[idx] = np.where(up, m, h)
        lo[idx] = np.where(up, l, m)
        steps[idx] += 1
        active = (hi - lo > eps) & (steps >= 0)
    return steps, exhausted
