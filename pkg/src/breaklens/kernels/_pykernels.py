"""Pure-Python/numpy implementations of the hot kernels.

Semantics are identical to the compiled module ``_ckernels``; this module is
also the only backend for the ``l1`` cost, which has no prefix-sum form.
"""

from __future__ import annotations

import math

import numpy as np

NORMAL_EPS = 1e-8
MODELS = ("l2", "normal", "l1")


class _Cost:
    """Segment cost over half-open index ranges ``[a, b)``."""

    def __init__(self, y, model):
        if model not in MODELS:
            raise ValueError(f"unknown cost model {model!r}")
        self.model = model
        self.y = np.ascontiguousarray(y, dtype=float)
        self.s1 = np.concatenate([[0.0], np.cumsum(self.y)])
        self.s2 = np.concatenate([[0.0], np.cumsum(self.y * self.y)])

    def one(self, a, b):
        return float(self.many(np.array([a]), b)[0])

    def many(self, starts, b):
        """Costs of ``[s, b)`` for every ``s`` in ``starts``."""
        starts = np.asarray(starts, dtype=np.int64)
        m = (b - starts).astype(float)
        if self.model == "l1":
            return np.array([np.abs(self.y[s:b] - np.median(self.y[s:b])).sum() for s in starts])
        d1 = self.s1[b] - self.s1[starts]
        d2 = self.s2[b] - self.s2[starts]
        if self.model == "l2":
            return np.maximum(d2 - d1 * d1 / m, 0.0)
        var = np.maximum(d2 / m - (d1 / m) ** 2, 0.0)
        return m * np.log(var + NORMAL_EPS)


    def ends(self, a, ends):
        """Costs of ``[a, e)`` for every ``e`` in ``ends``."""
        ends = np.asarray(ends, dtype=np.int64)
        if self.model == "l1":
            return np.array([np.abs(self.y[a:e] - np.median(self.y[a:e])).sum() for e in ends])
        m = (ends - a).astype(float)
        d1 = self.s1[ends] - self.s1[a]
        d2 = self.s2[ends] - self.s2[a]
        if self.model == "l2":
            return np.maximum(d2 - d1 * d1 / m, 0.0)
        var = np.maximum(d2 / m - (d1 / m) ** 2, 0.0)
        return m * np.log(var + NORMAL_EPS)


def admissible_positions(n, min_size, jump):
    """Candidate break positions: multiples of ``jump`` keeping both sides >= min_size."""
    return [p for p in range(jump, n, jump) if min_size <= p <= n - min_size]


def pelt(y, model, pen, min_size, jump):
    """Exact penalized segmentation with pruning.

    Returns ``(breaks, total)`` where ``breaks`` ends with ``n`` and ``total``
    is sum of segment costs plus ``pen`` per break.
    """
    cost = _Cost(y, model)
    n = cost.y.size
    points = admissible_positions(n, min_size, jump) + [n]
    F = {0: -pen}
    last = {0: 0}
    prune_at = {}
    cand = []
    pending = [0]  # processed positions not yet eligible as last change
    for t in points:
        while pending and pending[0] <= t - min_size:
            s = pending.pop(0)
            dropped = prune_at.pop(s, ())
            if dropped:
                cand = [r for r in cand if r not in dropped]
            if math.isfinite(F[s]):
                cand.append(s)
        if not cand:
            F[t] = math.inf
            pending.append(t)
            continue
        arr = np.array(cand)
        base = np.array([F[r] for r in cand]) + cost.many(arr, t)
        vals = base + pen
        j = int(np.argmin(vals))
        F[t] = float(vals[j])
        last[t] = cand[j]
        if t == n:
            break
        prune_at[t] = set(arr[base > F[t]].tolist())
        pending.append(t)
    bkps = [n]
    t = n
    while t > 0:
        t = last[t]
        if t > 0:
            bkps.append(t)
    return sorted(bkps), F[n]


def segment_neighbourhood(y, model, max_bkps, min_size, jump):
    """Optimal segmentations with exactly 0..max_bkps breaks.

    Returns ``(costs, breaks)``; ``costs[k]`` is inf and ``breaks[k]`` is
    None when k breaks are infeasible under ``min_size``/``jump``.
    """
    cost = _Cost(y, model)
    n = cost.y.size
    P = [0] + admissible_positions(n, min_size, jump) + [n]
    m = len(P)
    Parr = np.array(P)
    D = np.full((max_bkps + 1, m), math.inf)
    arg = np.full((max_bkps + 1, m), -1, dtype=np.int64)
    for j in range(1, m):
        D[0, j] = cost.one(0, P[j])
    for k in range(1, max_bkps + 1):
        for j in range(1, m):
            hi = int(np.searchsorted(Parr, P[j] - min_size, side="right"))
            if hi <= 1:
                continue
            idx = np.arange(1, hi)
            prev = D[k - 1, idx]
            ok = np.isfinite(prev)
            if not ok.any():
                continue
            idx = idx[ok]
            vals = D[k - 1, idx] + cost.many(Parr[idx], P[j])
            i = int(np.argmin(vals))
            D[k, j] = vals[i]
            arg[k, j] = idx[i]
    costs, breaks = [], []
    for k in range(max_bkps + 1):
        total = float(D[k, m - 1])
        costs.append(total)
        if not math.isfinite(total):
            breaks.append(None)
            continue
        out, j = [], m - 1
        for kk in range(k, 0, -1):
            j = int(arg[kk, j])
            out.append(P[j])
        breaks.append(sorted(out))
    return np.array(costs), breaks


def best_splits(y, starts, ends, min_size):
    """Best single l2 split of every interval ``[starts[i], ends[i])``.

    Returns ``(index, gain)`` arrays; index -1 and gain -inf where the
    interval is too short to split.
    """
    cost = _Cost(y, "l2")
    starts = np.asarray(starts, dtype=np.int64)
    ends = np.asarray(ends, dtype=np.int64)
    idx = np.full(starts.size, -1, dtype=np.int64)
    gain = np.full(starts.size, -np.inf)
    for i, (s, e) in enumerate(zip(starts, ends)):
        ts = np.arange(s + min_size, e - min_size + 1)
        if ts.size == 0:
            continue
        total = cost.one(s, e)
        left = cost.s2[ts] - cost.s2[s] - (cost.s1[ts] - cost.s1[s]) ** 2 / (ts - s)
        right = cost.s2[e] - cost.s2[ts] - (cost.s1[e] - cost.s1[ts]) ** 2 / (e - ts)
        g = total - np.maximum(left, 0.0) - np.maximum(right, 0.0)
        j = int(np.argmax(g))
        idx[i] = ts[j]
        gain[i] = g[j]
    return idx, gain


def trend_cd(tt, y, knots, lam, tol, max_sweeps):
    """Cyclic coordinate descent for 0.5*||y - a - b*t - Z d||^2 + lam*||d||_1.

    ``Z[:, j] = max(0, t - t[knots[j]])``. Intercept and slope are
    unpenalized and updated jointly. Returns
    ``(a, b, deltas, sweeps, objective_trace)``.
    """
    tt = np.asarray(tt, dtype=float)
    y = np.asarray(y, dtype=float)
    knots = np.asarray(knots, dtype=np.int64)
    n, K = y.size, knots.size
    Z = np.maximum(0.0, tt[:, None] - tt[knots][None, :]) if K else np.empty((n, 0))
    zsq = (Z * Z).sum(axis=0)
    st, stt = tt.sum(), (tt * tt).sum()
    det = n * stt - st * st
    a = b = 0.0
    d = np.zeros(K)
    r = y.copy()
    trace = []
    prev = math.inf
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        w = r + a + b * tt
        sw, stw = w.sum(), (tt * w).sum()
        a_new = (stt * sw - st * stw) / det
        b_new = (n * stw - st * sw) / det
        r -= (a_new - a) + (b_new - b) * tt
        a, b = a_new, b_new
        for j in range(K):
            if zsq[j] <= 0.0:
                continue
            z = Z[:, j]
            rho = float(z @ r) + d[j] * zsq[j]
            new = math.copysign(max(abs(rho) - lam, 0.0), rho) / zsq[j]
            if new != d[j]:
                r -= z * (new - d[j])
                d[j] = new
        obj = 0.5 * float(r @ r) + lam * float(np.abs(d).sum())
        trace.append(obj)
        if obj == 0.0 or (math.isfinite(prev) and abs(prev - obj) <= tol * max(abs(prev), 1e-300)):
            break
        prev = obj
    return a, b, d, sweeps, np.array(trace)
