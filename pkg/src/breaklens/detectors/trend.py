"""Piecewise-linear trend detector with an L1 penalty on slope changes.

The trend is ``g(t) = a + b*t + sum_j delta_j * max(0, t - s_j)`` on a
rescaled time axis ``t in [0, 1]`` with candidate kinks ``s_j`` spread over
the first ``changepoint_range`` share of the series. Minimizing
``0.5*||y - g||^2 + lam*||delta||_1`` is the MAP estimate under a Laplace
prior on the deltas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from breaklens.detectors.base import DetectorConfig, DetectorError, Detection, require_length
from breaklens.kernels import trend_cd
from breaklens.timeseries import TimeSeries

__all__ = ["TrendFit", "candidate_locations", "fit_trend", "trend_detect"]


@dataclass(frozen=True)
class TrendFit:
    base_intercept: float
    base_slope: float
    candidate_locations: np.ndarray
    deltas: np.ndarray
    sigma_y: float
    penalty: float
    sweeps: int
    objective_trace: np.ndarray

    def predict(self, n: int) -> np.ndarray:
        tt = _time_axis(n)
        g = self.base_intercept + self.base_slope * tt
        for k, d in zip(self.candidate_locations, self.deltas):
            g += d * np.maximum(0.0, tt - tt[k])
        return g


def _time_axis(n: int) -> np.ndarray:
    return np.arange(n, dtype=float) / max(n - 1, 1)


def candidate_locations(n: int, n_changepoints: int = 25, changepoint_range: float = 0.8) -> np.ndarray:
    """Evenly spaced kink indices over the first ``changepoint_range * n`` points."""
    span = changepoint_range * n
    locs = [int(round(i * span / (n_changepoints + 1))) for i in range(1, n_changepoints + 1)]
    locs = sorted({k for k in locs if 1 <= k <= n - 2})
    return np.asarray(locs, dtype=np.int64)


def fit_trend(y, cfg: DetectorConfig | None = None, penalty: float | None = None,
              tol: float = 1e-6, max_sweeps: int = 10_000) -> TrendFit:
    """Fit the penalized piecewise-linear trend by cyclic coordinate descent.

    The default L1 weight is ``std(y) / (changepoint_prior_scale * n)``.
    """
    cfg = cfg or DetectorConfig()
    y = np.asarray(y, dtype=float)
    n = y.size
    sigma_y = float(y.std(ddof=1)) if n > 1 else 0.0
    knots = candidate_locations(n, cfg.n_changepoints, cfg.changepoint_range)
    lam = penalty if penalty is not None else sigma_y / (cfg.changepoint_prior_scale * n)
    a, b, d, sweeps, trace = trend_cd(_time_axis(n), y, knots, lam, tol, max_sweeps)
    return TrendFit(float(a), float(b), knots, np.asarray(d), sigma_y, float(lam), int(sweeps), trace)


def _merge_runs(knots: np.ndarray, deltas: np.ndarray, sig: np.ndarray):
    """Collapse runs of adjacent significant same-sign kinks into one.

    The L1 fit often spreads a single slope change over two or three
    neighbouring grid knots. A run is summarized by its total delta at the
    |delta|-weighted mean location.
    """
    out = []
    j, K = 0, knots.size
    while j < K:
        if not sig[j]:
            j += 1
            continue
        run = [j]
        while j + 1 < K and sig[j + 1] and np.sign(deltas[j + 1]) == np.sign(deltas[j]):
            j += 1
            run.append(j)
        w = np.abs(deltas[run])
        loc = int(math.floor(float((knots[run] * w).sum() / w.sum()) + 0.5))
        out.append((loc, float(deltas[run].sum())))
        j += 1
    return out


def trend_detect(ts: TimeSeries, cfg: DetectorConfig | None = None) -> list[Detection]:
    """Slope changes whose fitted |delta| exceeds ``0.01 * std(y)``."""
    cfg = cfg or DetectorConfig()
    require_length(ts.n, "prophet")
    y = np.asarray(ts.values, dtype=float)
    if np.ptp(y) <= 1e-12 * max(1.0, float(np.abs(y).max())):
        return []
    fit = fit_trend(y, cfg)
    if fit.candidate_locations.size == 0:
        raise DetectorError("prophet: series too short for any changepoint candidate")
    sig = np.abs(fit.deltas) > 0.01 * fit.sigma_y
    merged = _merge_runs(fit.candidate_locations, fit.deltas, sig)
    if not merged:
        return []
    top = max(abs(d) for _, d in merged)
    return [
        Detection(loc, 0.4 + 0.5 * abs(d) / top, "prophet", d)
        for loc, d in merged
    ]
