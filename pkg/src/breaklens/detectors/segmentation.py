"""Cost-based segmentation detectors: PELT, binary segmentation, optimal
dynamic programming, MOSUM and wild binary segmentation.

PELT, binary segmentation, dynamic programming and WBS work on the z-scored
series so that the default penalties (multiples of ``ln n``) are in units of
the noise-free scale rather than the data's units. MOSUM is scale free.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from breaklens.detectors.base import (
    DetectorConfig,
    DetectorError,
    Detection,
    boundary_distance,
    clamp,
    require_length,
    standardize,
)
from breaklens.kernels import admissible_positions, best_splits, pelt, segment_neighbourhood
from breaklens.kernels._pykernels import _Cost
from breaklens.timeseries import TimeSeries

log = logging.getLogger(__name__)

__all__ = [
    "PenaltySpec",
    "segment_cost",
    "pelt_segment",
    "pelt_detect",
    "binseg_detect",
    "dynp_detect",
    "mosum_detect",
    "mosum_statistic",
    "wbs_detect",
]

DYNP_WARN_N = 2000


@dataclass(frozen=True)
class PenaltySpec:
    """Either a penalty per break or a fixed number of breaks."""

    beta: float | None = None
    n_bkps: int | None = None

    def __post_init__(self):
        if (self.beta is None) == (self.n_bkps is None):
            raise ValueError("exactly one of beta and n_bkps must be set")
        if self.beta is not None and self.beta < 0:
            raise ValueError("beta must be non-negative")
        if self.n_bkps is not None and self.n_bkps < 0:
            raise ValueError("n_bkps must be non-negative")


def segment_cost(y, model: str = "l2") -> _Cost:
    """Cost evaluator with ``one(a, b)``, ``many(starts, b)`` and ``ends(a, ends)``."""
    return _Cost(y, model)


def _pelt_defaults(n: int, cfg: DetectorConfig) -> tuple[float, int, int]:
    pen = cfg.penalty if cfg.penalty is not None else 3.0 * math.log(n)
    min_size = cfg.min_size if cfg.min_size is not None else max(2, int(math.floor(0.02 * n)))
    jump = cfg.jump if cfg.jump is not None else 1
    return pen, min_size, jump


def _check_sizes(n: int, min_size: int, jump: int, method_id: str) -> None:
    if min_size < 1 or jump < 1:
        raise DetectorError(f"{method_id}: min_size and jump must be positive")
    if 2 * min_size > n:
        raise DetectorError(f"{method_id}: min_size {min_size} too large for n={n}")


def pelt_segment(y, model: str, pen: float, min_size: int, jump: int) -> tuple[list[int], float]:
    """Optimal penalized partition: ``(break indices, penalized cost)``."""
    bkps, total = pelt(np.asarray(y, dtype=float), model, pen, min_size, jump)
    return bkps[:-1], float(total)


def _pelt_confidence(y: np.ndarray, k: int, half: int = 5) -> float:
    left, right = y[max(0, k - half):k], y[k:k + half]
    diff = abs(right.mean() - left.mean())
    vl = left.var(ddof=1) if left.size > 1 else 0.0
    vr = right.var(ddof=1) if right.size > 1 else 0.0
    sd = math.sqrt((vl + vr) / 2.0)
    if sd <= 1e-12:
        return 1.0 if diff > 1e-12 else 0.0
    return 1.0 - math.exp(-diff / sd)


def pelt_detect(ts: TimeSeries, cfg: DetectorConfig | None = None) -> list[Detection]:
    """Penalized optimal partitioning with pruning."""
    cfg = cfg or DetectorConfig()
    require_length(ts.n, "pelt")
    n = ts.n
    pen, min_size, jump = _pelt_defaults(n, cfg)
    _check_sizes(n, min_size, jump, "pelt")
    z = standardize(ts.values)
    if cfg.n_bkps is not None:
        bkps = _dynp_breaks(z, cfg.model, cfg.n_bkps, min_size, jump, "pelt")
        total = math.nan
    else:
        bkps, total = pelt_segment(z, cfg.model, pen, min_size, jump)
    return [Detection(int(k), clamp(_pelt_confidence(z, k), 0.0, 1.0), "pelt", total) for k in bkps]


# --------------------------------------------------------------------------
# Binary segmentation
# --------------------------------------------------------------------------


def _best_single_split(cost: _Cost, a: int, b: int, positions: np.ndarray):
    cand = positions[(positions > a) & (positions < b)]
    if cand.size == 0:
        return None, -math.inf
    total = cost.one(a, b)
    gains = total - cost.ends(a, cand) - cost.many(cand, b)
    j = int(np.argmax(gains))
    return int(cand[j]), float(gains[j])


def _local_window(y: np.ndarray, k: int, half: int):
    return y[max(0, k - half):k], y[k:k + half]


def _binseg_confidence(y: np.ndarray, k: int, half: int) -> float:
    left, right = _local_window(y, k, half)
    both = np.concatenate([left, right])
    var_total = both.var()
    if var_total <= 1e-24:
        return 0.1
    var_seg = (((left - left.mean()) ** 2).sum() + ((right - right.mean()) ** 2).sum()) / both.size
    return clamp(2.0 * (var_total - var_seg) / var_total, 0.1, 0.95)


def binseg_detect(ts: TimeSeries, cfg: DetectorConfig | None = None) -> list[Detection]:
    """Greedy top-down splitting.

    The admissible split with the largest cost reduction across all current
    segments is taken while that reduction exceeds the penalty, or until
    ``n_bkps`` breaks exist when a break count is configured.
    """
    cfg = cfg or DetectorConfig()
    require_length(ts.n, "binary_segmentation")
    n = ts.n
    pen = cfg.penalty if cfg.penalty is not None else 2.0 * math.log(n)
    min_size = cfg.min_size if cfg.min_size is not None else 2
    jump = cfg.jump if cfg.jump is not None else 5
    _check_sizes(n, min_size, jump, "binary_segmentation")
    z = standardize(ts.values)
    cost = segment_cost(z, cfg.model)
    positions = np.array(admissible_positions(n, min_size, jump), dtype=np.int64)

    def split(a, b):
        ok = positions[(positions - a >= min_size) & (b - positions >= min_size)]
        return _best_single_split(cost, a, b, ok)

    segments = {(0, n): split(0, n)}
    bkps: list[tuple[int, float]] = []
    while True:
        if cfg.n_bkps is not None and len(bkps) >= cfg.n_bkps:
            break
        (a, b), (t, gain) = max(segments.items(), key=lambda kv: (kv[1][1], -kv[0][0]))
        if t is None:
            break
        if cfg.n_bkps is None and not gain > pen:
            break
        del segments[(a, b)]
        bkps.append((t, gain))
        segments[(a, t)] = split(a, t)
        segments[(t, b)] = split(t, b)
    half = 2 * min_size
    return [
        Detection(t, _binseg_confidence(z, t, half), "binary_segmentation", g)
        for t, g in sorted(bkps)
    ]


# --------------------------------------------------------------------------
# Dynamic programming
# --------------------------------------------------------------------------


def _dynp_breaks(y, model, n_bkps, min_size, jump, method_id) -> list[int]:
    costs, parts = segment_neighbourhood(y, model, n_bkps, min_size, jump)
    if parts[n_bkps] is None:
        raise DetectorError(f"{method_id}: {n_bkps} breaks infeasible with min_size={min_size}")
    return list(parts[n_bkps])


def _local_improvement(cost: _Cost, k: int, half: int, n: int) -> float:
    a, b = max(0, k - half), min(n, k + half)
    merged = cost.one(a, b)
    if merged <= 1e-24:
        return 0.0
    return (merged - cost.one(a, k) - cost.one(k, b)) / merged


def dynp_detect(ts: TimeSeries, cfg: DetectorConfig | None = None) -> list[Detection]:
    """Globally optimal segmentation with a fixed number of breaks.

    Without ``n_bkps`` the count is taken from PELT at its default penalty.
    """
    cfg = cfg or DetectorConfig()
    require_length(ts.n, "dynamic_programming")
    n = ts.n
    pen, min_size, jump = _pelt_defaults(n, cfg)
    _check_sizes(n, min_size, jump, "dynamic_programming")
    if n > DYNP_WARN_N:
        log.warning("dynamic_programming on n=%d: quadratic cost per break, expect a slow run", n)
    z = standardize(ts.values)
    n_bkps = cfg.n_bkps
    if n_bkps is None:
        n_bkps = len(pelt_segment(z, cfg.model, pen, min_size, jump)[0])
    bkps = _dynp_breaks(z, cfg.model, n_bkps, min_size, jump, "dynamic_programming")
    cost = segment_cost(z, cfg.model)
    half = 2 * min_size
    out = []
    for k in bkps:
        li = _local_improvement(cost, k, half, n)
        out.append(Detection(int(k), clamp(0.3 + 0.6 * li, 0.15, 0.95), "dynamic_programming", li))
    return out


# --------------------------------------------------------------------------
# MOSUM
# --------------------------------------------------------------------------


def mosum_statistic(y, w: int) -> tuple[np.ndarray, np.ndarray]:
    """Moving-sum statistic ``T_k`` for ``k = w..n-w``.

    ``T_k`` compares the means of the ``w`` points before and from ``k`` on,
    scaled by the pooled within-window variance; zero variance gives 0.
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    if 2 * w > n:
        raise DetectorError(f"mosum: window {w} too large for n={n}")
    ks = np.arange(w, n - w + 1)
    win = np.lib.stride_tricks.sliding_window_view(y, w)
    means, vars_ = win.mean(axis=1), win.var(axis=1, ddof=1)
    left_m, left_v = means[ks - w], vars_[ks - w]
    right_m, right_v = means[ks], vars_[ks]
    pooled = (left_v + right_v) / 2.0
    diff = np.abs(right_m - left_m)
    scale = max(1.0, float(np.abs(y).max()))
    ok = pooled > (1e-12 * scale) ** 2
    T = np.zeros(ks.size)
    T[ok] = diff[ok] * np.sqrt(w / (2.0 * pooled[ok]))
    return ks, T


def mosum_detect(ts: TimeSeries, cfg: DetectorConfig | None = None) -> list[Detection]:
    """Threshold exceedances of the MOSUM statistic.

    Exceedances closer than ``w/2`` to each other are chained into one
    group and each group reports its maximum.
    """
    cfg = cfg or DetectorConfig()
    require_length(ts.n, "mosum")
    n = ts.n
    w = cfg.window if cfg.window is not None else max(10, n // 10)
    if 2 * w >= n:
        raise DetectorError(f"mosum: window {w} too large for n={n}")
    threshold = cfg.penalty if cfg.penalty is not None else 3.5
    ks, T = mosum_statistic(ts.values, w)
    hits = np.flatnonzero(T > threshold)
    if hits.size == 0:
        return []
    groups, cur = [], [hits[0]]
    for i in hits[1:]:
        if ks[i] - ks[cur[-1]] <= w / 2:
            cur.append(i)
        else:
            groups.append(cur)
            cur = [i]
    groups.append(cur)
    out = []
    for g in groups:
        g = np.asarray(g)
        i = int(g[np.argmax(T[g])])
        k = int(ks[i])
        if not 1 <= k <= n - 1:
            continue
        conf = 0.5 + 0.4 * min(1.0, w / 20.0) + 0.1 * min(1.0, boundary_distance(k, n) / w)
        out.append(Detection(k, clamp(conf, 0.0, 1.0), "mosum", float(T[i])))
    return out


# --------------------------------------------------------------------------
# Wild binary segmentation
# --------------------------------------------------------------------------


def wbs_detect(ts: TimeSeries, cfg: DetectorConfig | None = None) -> list[Detection]:
    """Random-interval binary segmentation aggregated by detection frequency.

    ``max(100, 2n)`` intervals with lengths in ``[w, 2w]`` are drawn from a
    seeded generator. Each interval contributes its best single l2 split when
    the gain beats the penalty. Split counts are smoothed over +-2 indices
    and divided by the number of intervals that could split at that index.
    Local maxima with a detection rate of at least 5% survive, thinned so
    that no two lie within ``w/2``.
    """
    cfg = cfg or DetectorConfig()
    require_length(ts.n, "wild_binary_segmentation")
    n = ts.n
    w = max(10, int(math.floor(cfg.width * n)))
    if 2 * w > n:
        raise DetectorError(f"wild_binary_segmentation: width {w} too large for n={n}")
    pen = cfg.penalty if cfg.penalty is not None else 2.0 * math.log(n)
    min_size = cfg.min_size if cfg.min_size is not None else 2
    M = max(100, 2 * n)
    rng = np.random.default_rng(cfg.seed)
    lengths = rng.integers(w, 2 * w + 1, size=M)
    lengths = np.minimum(lengths, n)
    starts = rng.integers(0, n - lengths + 1)
    ends = starts + lengths
    z = standardize(ts.values)
    idx, gain = best_splits(z, starts, ends, min_size)
    keep = (idx > 0) & (gain > pen)
    counts = np.bincount(idx[keep], minlength=n + 1)[: n + 1].astype(float)
    smooth = np.convolve(counts, np.ones(5), mode="same")
    # number of intervals able to place a split at each index
    cover = np.zeros(n + 2)
    np.add.at(cover, starts + min_size, 1.0)
    np.add.at(cover, np.maximum(ends - min_size + 1, starts + min_size), -1.0)
    cover = np.cumsum(cover)[: n + 1]
    rate = np.where(cover > 0, smooth / np.maximum(cover, 1.0), 0.0)
    peaks = [
        k for k in range(1, n)
        if smooth[k] > 0 and rate[k] >= 0.05
        and smooth[k] >= smooth[k - 1] and smooth[k] >= smooth[k + 1]
    ]
    peaks.sort(key=lambda k: (-smooth[k], -counts[k], k))
    chosen: list[int] = []
    for k in peaks:
        if all(abs(k - c) > w / 2 for c in chosen):
            chosen.append(k)
    if cfg.n_bkps is not None:
        chosen = chosen[: cfg.n_bkps]
    out = []
    for k in sorted(chosen):
        conf = 0.65 + 0.25 * min(1.0, boundary_distance(k, n) / w)
        out.append(Detection(int(k), conf, "wild_binary_segmentation", float(rate[k])))
    return out
