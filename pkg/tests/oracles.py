"""Slow, direct reference computations used as test oracles.

Nothing here shares code with the package: segment costs are evaluated on
slices, partitions are enumerated or solved by the textbook recursion.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def seg_cost(y, a, b, model="l2"):
    s = np.asarray(y[a:b], dtype=float)
    if model == "l2":
        return float(((s - s.mean()) ** 2).sum())
    if model == "l1":
        return float(np.abs(s - np.median(s)).sum())
    if model == "normal":
        return float(s.size * math.log(s.var() + 1e-8))
    raise ValueError(model)


def partition_cost(y, bkps, model="l2"):
    b = [0, *bkps, len(y)]
    return sum(seg_cost(y, b[i], b[i + 1], model) for i in range(len(b) - 1))


def _positions(n, min_size, jump=1):
    return [p for p in range(jump, n, jump) if min_size <= p <= n - min_size]


def _valid(bkps, n, min_size):
    b = [0, *bkps, n]
    return all(b[i + 1] - b[i] >= min_size for i in range(len(b) - 1))


def enumerate_penalized(y, pen, min_size, model="l2"):
    """Literal enumeration of every admissible break subset (small n only)."""
    n = len(y)
    pos = _positions(n, min_size)
    best = (math.inf, None)
    for m in range(len(pos) + 1):
        for bk in itertools.combinations(pos, m):
            if _valid(bk, n, min_size):
                c = partition_cost(y, bk, model) + pen * m
                if c < best[0]:
                    best = (c, list(bk))
    return best


def optimal_partitioning(y, pen, min_size, model="l2"):
    """Unpruned O(n^2) optimal partitioning with directly evaluated costs."""
    n = len(y)
    F = [-pen] + [math.inf] * n
    last = [0] * (n + 1)
    for t in range(min_size, n + 1):
        for s in range(0, t - min_size + 1):
            if s != 0 and s < min_size:
                continue
            if not math.isfinite(F[s]):
                continue
            v = F[s] + seg_cost(y, s, t, model) + pen
            if v < F[t]:
                F[t], last[t] = v, s
    bk, t = [], n
    while t > 0:
        t = last[t]
        if t > 0:
            bk.append(t)
    return F[n], sorted(bk)


def brute_m_breaks(y, m, min_size, model="l2"):
    n = len(y)
    best = (math.inf, None)
    for bk in itertools.combinations(_positions(n, min_size), m):
        if _valid(bk, n, min_size):
            c = partition_cost(y, bk, model)
            if c < best[0]:
                best = (c, list(bk))
    return best


def cusum_direct(y, trend="c"):
    """Two-pass recomputation of S*_t from a fresh least-squares fit."""
    y = np.asarray(y, dtype=float)
    n = y.size
    cols = {"n": [], "c": [np.ones(n)], "ct": [np.ones(n), np.arange(1.0, n + 1)]}[trend]
    if cols:
        X = np.column_stack(cols)
        beta = np.linalg.lstsq(X, y, rcond=None)[0]
        e = y - X @ beta
    else:
        e = y.copy()
    k = len(cols)
    ebar = sum(e) / n
    sigma = math.sqrt(sum(v * v for v in e) / (n - k))
    out, run = [], 0.0
    for v in e:
        run += v - ebar
        out.append(run / (sigma * math.sqrt(n)))
    return np.array(out)


def mosum_direct(y, w):
    y = np.asarray(y, dtype=float)
    n = y.size
    ks, T = [], []
    for k in range(w, n - w + 1):
        left, right = y[k - w:k], y[k:k + w]
        pooled = (left.var(ddof=1) + right.var(ddof=1)) / 2
        ks.append(k)
        T.append(0.0 if pooled == 0 else abs(right.mean() - left.mean()) * math.sqrt(w / (2 * pooled)))
    return np.array(ks), np.array(T)
