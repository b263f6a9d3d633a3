"""Counting kernels behind every data statistic.

Each kernel exists twice: an explicit-loop version compiled with
``numba.njit`` and a vectorized numpy version.  The environment variable
``DPAGNOSTIC_NUMBA=0`` (or a missing numba install) selects numpy.  Both
backends return identical integer arrays; ``tests/test_kernels.py`` checks
that on random inputs and ``benchmarks/bench_kernels.py`` times them.

Conventions: ``xs`` is an ``(n, m)`` int64 array of domain points in
``1..domain_size``, ``ys`` the matching uint8 labels, and ``xs_sorted`` the
same points sorted within each row.  Threshold ``u`` predicts 1 iff ``x > u``.
"""

from __future__ import annotations

import os
from types import SimpleNamespace

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_flag = os.environ.get("DPAGNOSTIC_NUMBA", "1").strip().lower()
USE_NUMBA = numba is not None and _flag not in ("0", "false", "no", "off")
BACKEND = "numba" if USE_NUMBA else "numpy"

# cap on temporaries in the numpy paths, in elements
_CHUNK = 1 << 24


# --------------------------------------------------------------------------
# per-user mistake counts for explicit tables
# --------------------------------------------------------------------------

def _loop_table_user_mistakes(table, xs, ys):
    k = table.shape[0]
    n, m = xs.shape
    out = np.zeros((k, n), dtype=np.int64)
    for c in range(k):
        for i in range(n):
            cnt = 0
            for j in range(m):
                if table[c, xs[i, j] - 1] != ys[i, j]:
                    cnt += 1
            out[c, i] = cnt
    return out


def _np_table_user_mistakes(table, xs, ys):
    k = table.shape[0]
    n, m = xs.shape
    out = np.empty((k, n), dtype=np.int64)
    step = max(1, _CHUNK // max(1, n * m))
    idx = xs - 1
    for a in range(0, k, step):
        pred = table[a:a + step][:, idx]
        out[a:a + step] = (pred != ys).sum(axis=2)
    return out


# --------------------------------------------------------------------------
# user-level disagreement counts between two explicit classes
# --------------------------------------------------------------------------

def _loop_table_user_disagreements(tab_c, tab_h, xs, s):
    kc = tab_c.shape[0]
    kh = tab_h.shape[0]
    n, m = xs.shape
    out = np.zeros((kc, kh), dtype=np.int64)
    for c in range(kc):
        for h in range(kh):
            users = 0
            for i in range(n):
                cnt = 0
                for j in range(m):
                    x = xs[i, j] - 1
                    if tab_c[c, x] != tab_h[h, x]:
                        cnt += 1
                if cnt > s:
                    users += 1
            out[c, h] = users
    return out


def _np_table_user_disagreements(tab_c, tab_h, xs, s):
    kc = tab_c.shape[0]
    kh = tab_h.shape[0]
    n, m = xs.shape
    out = np.empty((kc, kh), dtype=np.int64)
    idx = xs - 1
    step = max(1, _CHUNK // max(1, n * m))
    for h in range(kh):
        diff = tab_c != tab_h[h]
        for a in range(0, kc, step):
            per_user = diff[a:a + step][:, idx].sum(axis=2)
            out[a:a + step, h] = (per_user > s).sum(axis=1)
    return out


# --------------------------------------------------------------------------
# thresholds: users with more than t mistakes, for every u in 0..|X|
# --------------------------------------------------------------------------

def _loop_threshold_user_errors(xs_sorted, ys_sorted, t, domain_size):
    n, m = xs_sorted.shape
    diff = np.zeros(domain_size + 2, dtype=np.int64)
    for i in range(n):
        cur = 0
        for j in range(m):
            if ys_sorted[i, j] == 0:
                cur += 1
        start = 0
        j = 0
        while j < m:
            x = xs_sorted[i, j]
            # mistakes equal cur on u in [start, x - 1]
            if cur > t and x - 1 >= start:
                diff[start] += 1
                diff[x] -= 1
            while j < m and xs_sorted[i, j] == x:
                if ys_sorted[i, j] == 1:
                    cur += 1
                else:
                    cur -= 1
                j += 1
            start = x
        if cur > t:
            diff[start] += 1
            diff[domain_size + 1] -= 1
    out = np.empty(domain_size + 1, dtype=np.int64)
    acc = 0
    for u in range(domain_size + 1):
        acc += diff[u]
        out[u] = acc
    return out


def _np_threshold_user_errors(xs_sorted, ys_sorted, t, domain_size):
    n, m = xs_sorted.shape
    out = np.zeros(domain_size + 1, dtype=np.int64)
    step = max(1, _CHUNK // (domain_size + 1))
    sign = np.where(ys_sorted == 1, 1, -1).astype(np.int64)
    base = (ys_sorted == 0).sum(axis=1)
    for a in range(0, n, step):
        b = min(n, a + step)
        delta = np.zeros((b - a, domain_size + 1), dtype=np.int64)
        rows = np.repeat(np.arange(b - a), m)
        np.add.at(delta, (rows, xs_sorted[a:b].ravel()), sign[a:b].ravel())
        mistakes = base[a:b, None] + np.cumsum(delta, axis=1)
        out += (mistakes > t).sum(axis=0)
    return out


# --------------------------------------------------------------------------
# thresholds: min over concepts of E[c] + (#users with > s points between c and v)
# --------------------------------------------------------------------------

def _loop_threshold_user_surrogate(xs_sorted, cu, err_c, hv, s, domain_size):
    n, m = xs_sorted.shape
    kh = hv.shape[0]
    kc = cu.shape[0]
    out = np.empty(kh, dtype=np.int64)
    cnt_r = np.zeros(domain_size + 2, dtype=np.int64)
    cnt_l = np.zeros(domain_size + 2, dtype=np.int64)
    dis = np.zeros(domain_size + 1, dtype=np.int64)
    for h in range(kh):
        v = hv[h]
        cnt_r[:] = 0
        cnt_l[:] = 0
        n_left = 0
        for i in range(n):
            row = xs_sorted[i]
            lo = 0
            hi = m
            while lo < hi:  # number of points <= v
                mid = (lo + hi) // 2
                if row[mid] <= v:
                    lo = mid + 1
                else:
                    hi = mid
            below = lo
            if below + s < m:
                cnt_r[row[below + s]] += 1  # u >= this point: > s points in (v, u]
            if below - 1 - s >= 0:
                cnt_l[row[below - 1 - s]] += 1  # u < this point: > s points in (u, v]
                n_left += 1
        acc_r = 0
        acc_l = 0
        for u in range(domain_size + 1):
            acc_r += cnt_r[u]
            acc_l += cnt_l[u]
            dis[u] = acc_r + (n_left - acc_l)
        best = err_c[0] + dis[cu[0]]
        for c in range(1, kc):
            val = err_c[c] + dis[cu[c]]
            if val < best:
                best = val
        out[h] = best
    return out


def _np_threshold_user_surrogate(xs_sorted, cu, err_c, hv, s, domain_size):
    n, m = xs_sorted.shape
    out = np.empty(hv.shape[0], dtype=np.int64)
    rows = np.arange(n)
    for h, v in enumerate(hv):
        below = (xs_sorted <= v).sum(axis=1)
        has_r = below + s < m
        r_pts = xs_sorted[rows[has_r], (below + s)[has_r]]
        has_l = below - 1 - s >= 0
        l_pts = xs_sorted[rows[has_l], (below - 1 - s)[has_l]]
        cnt_r = np.bincount(r_pts, minlength=domain_size + 1)
        cnt_l = np.bincount(l_pts, minlength=domain_size + 1)
        dis = np.cumsum(cnt_r) + (l_pts.size - np.cumsum(cnt_l))
        out[h] = (err_c + dis[cu]).min()
    return out


# --------------------------------------------------------------------------
# median scores: users with > s points in [l, u-1] and in [u+1, r]
# --------------------------------------------------------------------------

def _loop_median_counts(xs_sorted, l, r, s):
    n, m = xs_sorted.shape
    width = r - l + 1
    diff_left = np.zeros(width + 1, dtype=np.int64)
    diff_right = np.zeros(width + 1, dtype=np.int64)
    for i in range(n):
        row = xs_sorted[i]
        first = 0
        while first < m and row[first] < l:
            first += 1
        last = first
        while last < m and row[last] <= r:
            last += 1
        if last - first > s:
            a = row[first + s]  # left side counts for u >= a + 1
            if a + 1 <= r:
                diff_left[a + 1 - l] += 1
            b = row[last - 1 - s]  # right side counts for u <= b - 1
            if b - 1 >= l:
                diff_right[0] += 1
                diff_right[b - l] -= 1
    left = np.empty(width, dtype=np.int64)
    right = np.empty(width, dtype=np.int64)
    acc_l = 0
    acc_r = 0
    for k in range(width):
        acc_l += diff_left[k]
        acc_r += diff_right[k]
        left[k] = acc_l
        right[k] = acc_r
    return left, right


def _np_median_counts(xs_sorted, l, r, s):
    n, m = xs_sorted.shape
    width = r - l + 1
    first = (xs_sorted < l).sum(axis=1)
    last = (xs_sorted <= r).sum(axis=1)
    ok = last - first > s
    rows = np.nonzero(ok)[0]
    a = xs_sorted[rows, first[ok] + s]
    b = xs_sorted[rows, last[ok] - 1 - s]
    left = np.cumsum(np.bincount(a + 1 - l, minlength=width + 2)[:width])
    # right side counts for u in [l, b-1]
    ends = np.bincount(b - l, minlength=width + 1)[: width + 1]
    right = rows.size - np.cumsum(ends)[:width]
    return left.astype(np.int64), right.astype(np.int64)


_LOOPS = {
    "table_user_mistakes": _loop_table_user_mistakes,
    "table_user_disagreements": _loop_table_user_disagreements,
    "threshold_user_errors": _loop_threshold_user_errors,
    "threshold_user_surrogate": _loop_threshold_user_surrogate,
    "median_counts": _loop_median_counts,
}
_NUMPY = {
    "table_user_mistakes": _np_table_user_mistakes,
    "table_user_disagreements": _np_table_user_disagreements,
    "threshold_user_errors": _np_threshold_user_errors,
    "threshold_user_surrogate": _np_threshold_user_surrogate,
    "median_counts": _np_median_counts,
}

numpy_backend = SimpleNamespace(name="numpy", **_NUMPY)
if numba is not None:
    numba_backend = SimpleNamespace(
        name="numba", **{k: numba.njit(cache=True)(f) for k, f in _LOOPS.items()}
    )
else:  # pragma: no cover
    numba_backend = None

active = numba_backend if USE_NUMBA else numpy_backend

table_user_mistakes = active.table_user_mistakes
table_user_disagreements = active.table_user_disagreements
threshold_user_errors = active.threshold_user_errors
threshold_user_surrogate = active.threshold_user_surrogate
median_counts = active.median_counts
