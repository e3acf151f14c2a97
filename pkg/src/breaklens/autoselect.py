"""Rule-based automatic method selection.

The series is profiled (size, coefficient of variation, trend strength,
ADF p-value, outlier ratio, seasonal autocorrelation), methods lacking the
data they need are dropped, and the remaining ones are scored on seven
lookup tables. The highest total wins; ties go to the earlier method in
``METHOD_IDS``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from breaklens.detectors.base import METHOD_IDS, MIN_POINTS
from breaklens.timeseries import DegenerateRegressionError, TimeSeries, acf, adf_test, ols_fit

__all__ = [
    "DataProfile",
    "MethodScore",
    "SEASONAL_LAGS",
    "profile_data",
    "filter_methods",
    "score_method",
    "score_methods",
    "select_method",
    "SelectionError",
]

EPS = 1e-8
SEASONAL_LAGS = (7, 12, 24, 30, 365)
CRITERIA = ("sample_size", "noise", "trend", "seasonality", "efficiency", "stationarity", "outliers")


class SelectionError(ValueError):
    """No method can run on the series."""


@dataclass(frozen=True)
class DataProfile:
    n: int
    nu: float
    rho: float
    s: float
    o: float
    lam: float

    def as_dict(self) -> dict:
        return {"n": self.n, "nu": self.nu, "rho": self.rho, "s": self.s, "o": self.o, "lambda": self.lam}


@dataclass(frozen=True)
class MethodScore:
    method_id: str
    scores: tuple[float, ...]

    @property
    def total(self) -> float:
        return float(sum(self.scores))


# ---------------------------------------------------------------------------
# profiling
# ---------------------------------------------------------------------------


def _outlier_ratio(y: np.ndarray) -> float:
    resid = ols_fit(y, "ct").residuals.copy()
    scale = max(1.0, float(np.abs(y).max()))
    resid[np.abs(resid) <= 1e-9 * scale] = 0.0
    q1, q3 = np.percentile(resid, [25, 75])
    iqr = q3 - q1
    out = (resid < q1 - 1.5 * iqr) | (resid > q3 + 1.5 * iqr)
    return float(out.mean())


def profile_data(ts: TimeSeries) -> DataProfile:
    """Compute the six characteristics that drive the scoring tables.

    A series whose ADF regression is degenerate (for instance a constant) is
    treated as non-stationary, ``s = 1``.
    """
    y = np.asarray(ts.values, dtype=float)
    n = y.size
    if n < 10:
        raise SelectionError(f"profiling needs at least 10 observations, got {n}")
    nu = float(y.std() / (abs(y.mean()) + EPS))
    t = np.arange(1, n + 1, dtype=float)
    if y.std() <= 1e-12 * max(1.0, float(np.abs(y).max())):
        rho = 0.0
    else:
        rho = abs(float(np.corrcoef(y, t)[0, 1]))
        rho = 0.0 if math.isnan(rho) else min(rho, 1.0)
    try:
        s = adf_test(y, "c").p_value
    except DegenerateRegressionError:
        s = 1.0
    o = _outlier_ratio(y)
    lags = [k for k in SEASONAL_LAGS if k < n]
    lam = max((abs(acf(y, k)) for k in lags), default=0.0)
    return DataProfile(n, nu, rho, float(s), o, float(lam))


def filter_methods(profile: DataProfile) -> list[str]:
    """Methods whose minimum sample size is met, in ``METHOD_IDS`` order."""
    keep = [m for m in METHOD_IDS if MIN_POINTS[m] <= profile.n]
    if not keep:
        raise SelectionError(f"no method supports n={profile.n}")
    return keep


# ---------------------------------------------------------------------------
# scoring tables
# ---------------------------------------------------------------------------


def _f1(m: str, n: int) -> float:
    if n < 50:
        return {
            "bai_perron": 0.3,
            "cusum": 0.9 if n >= 20 else 0.2,
            "chow_test": 0.8 if n >= 40 else 0.4,
            "zivot_andrews": 0.8 if n >= 30 else 0.3,
            "pelt": 0.6,
            "binary_segmentation": 0.8 if n >= 30 else 0.5,
            "dynamic_programming": 0.4,
            "mosum": 0.8 if n >= 40 else 0.3,
            "wild_binary_segmentation": 0.4,
            "prophet": 0.4 if n >= 50 else 0.1,
        }[m]
    if n < 1000:
        return {
            "bai_perron": 0.9,
            "cusum": 0.9,
            "chow_test": 0.8,
            "zivot_andrews": 0.8,
            "pelt": 0.9,
            "binary_segmentation": 0.8,
            "dynamic_programming": 0.7,
            "mosum": 0.8,
            "wild_binary_segmentation": 0.8 if n >= 100 else 0.4,
            "prophet": 0.9 if n >= 100 else 0.4,
        }[m]
    return {
        "bai_perron": 0.6,
        "cusum": 0.9,
        "chow_test": 0.8,
        "zivot_andrews": 0.8,
        "pelt": 0.9,
        "binary_segmentation": 0.8,
        "dynamic_programming": 0.7,
        "mosum": 0.8,
        "wild_binary_segmentation": 0.8,
        "prophet": 0.9,
    }[m]


# columns follow the band order of each criterion
NOISE = {  # nu < 0.2, < 0.5, >= 0.5
    "bai_perron": (0.9, 0.6, 0.3),
    "cusum": (0.7, 0.8, 0.6),
    "chow_test": (0.8, 0.7, 0.4),
    "zivot_andrews": (0.8, 0.6, 0.4),
    "pelt": (0.8, 0.9, 0.7),
    "binary_segmentation": (0.7, 0.8, 0.7),
    "dynamic_programming": (0.8, 0.8, 0.6),
    "mosum": (0.6, 0.7, 0.6),
    "wild_binary_segmentation": (0.5, 0.8, 0.9),
    "prophet": (0.6, 0.8, 0.8),
}
TREND = {  # rho < 0.2, < 0.6, >= 0.6
    "bai_perron": (0.7, 0.7, 0.5),
    "cusum": (0.7, 0.8, 0.6),
    "chow_test": (0.7, 0.8, 0.6),
    "zivot_andrews": (0.7, 0.6, 0.4),
    "pelt": (0.7, 0.7, 0.5),
    "binary_segmentation": (0.7, 0.7, 0.5),
    "dynamic_programming": (0.7, 0.7, 0.5),
    "mosum": (0.7, 0.7, 0.6),
    "wild_binary_segmentation": (0.7, 0.6, 0.4),
    "prophet": (0.7, 0.9, 1.0),
}
SEASONALITY = {  # lambda < 0.5, >= 0.5
    "bai_perron": (0.7, 0.4),
    "cusum": (0.7, 0.5),
    "chow_test": (0.7, 0.5),
    "zivot_andrews": (0.7, 0.3),
    "pelt": (0.7, 0.6),
    "binary_segmentation": (0.7, 0.6),
    "dynamic_programming": (0.7, 0.6),
    "mosum": (0.7, 0.5),
    "wild_binary_segmentation": (0.7, 0.5),
    "prophet": (0.7, 0.9),
}
EFFICIENCY = {  # n < 100, < 1000, >= 1000
    "bai_perron": (0.7, 0.6, 0.4),
    "cusum": (0.7, 0.9, 0.8),
    "chow_test": (0.7, 0.7, 0.5),
    "zivot_andrews": (0.7, 0.8, 0.6),
    "pelt": (0.7, 0.9, 1.0),
    "binary_segmentation": (0.7, 0.8, 0.9),
    "dynamic_programming": (0.7, 0.6, 0.4),
    "mosum": (0.7, 0.7, 0.6),
    "wild_binary_segmentation": (0.7, 0.5, 0.3),
    "prophet": (0.7, 0.7, 0.6),
}
STATIONARITY = {  # s <= 0.05, > 0.05
    "bai_perron": (0.9, 0.3),
    "cusum": (0.8, 0.5),
    "chow_test": (0.8, 0.4),
    "zivot_andrews": (0.6, 1.0),
    "pelt": (0.8, 0.6),
    "binary_segmentation": (0.8, 0.6),
    "dynamic_programming": (0.8, 0.6),
    "mosum": (0.8, 0.5),
    "wild_binary_segmentation": (0.7, 0.5),
    "prophet": (0.7, 0.8),
}
OUTLIERS = {  # o < 0.05, >= 0.05
    "bai_perron": (0.7, 0.3),
    "cusum": (0.7, 0.6),
    "chow_test": (0.7, 0.4),
    "zivot_andrews": (0.7, 0.4),
    "pelt": (0.7, 0.7),
    "binary_segmentation": (0.7, 0.7),
    "dynamic_programming": (0.7, 0.7),
    "mosum": (0.7, 0.6),
    "wild_binary_segmentation": (0.7, 0.9),
    "prophet": (0.7, 0.8),
}


def _band3(x: float, lo: float, hi: float) -> int:
    return 0 if x < lo else (1 if x < hi else 2)


def score_method(method_id: str, profile: DataProfile) -> MethodScore:
    p = profile
    f = (
        _f1(method_id, p.n),
        NOISE[method_id][_band3(p.nu, 0.2, 0.5)],
        TREND[method_id][_band3(p.rho, 0.2, 0.6)],
        SEASONALITY[method_id][0 if p.lam < 0.5 else 1],
        EFFICIENCY[method_id][_band3(p.n, 100, 1000)],
        STATIONARITY[method_id][0 if p.s <= 0.05 else 1],
        OUTLIERS[method_id][0 if p.o < 0.05 else 1],
    )
    return MethodScore(method_id, f)


def score_methods(profile: DataProfile, candidates=None) -> list[MethodScore]:
    """Score table for ``candidates`` (default: all runnable methods)."""
    cands = filter_methods(profile) if candidates is None else [m for m in METHOD_IDS if m in set(candidates)]
    if not cands:
        raise SelectionError("no candidate methods to score")
    return [score_method(m, profile) for m in cands]


def select_method(ts: TimeSeries, profile: DataProfile | None = None) -> tuple[str, list[MethodScore]]:
    """Pick the highest-scoring runnable method and return the full score table.

    Totals are compared after rounding to 9 decimals so that float summation
    order cannot break a tie that the tables define as exact.
    """
    profile = profile or profile_data(ts)
    scores = score_methods(profile)
    best = max(scores, key=lambda sc: (round(sc.total, 9), -METHOD_IDS.index(sc.method_id)))
    return best.method_id, scores
