"""Shared detector types: detections, per-method configuration, method
identifiers and minimum data requirements."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

# Fixed order; also the tie-break order for automatic selection.
METHOD_IDS = (
    "bai_perron",
    "cusum",
    "chow_test",
    "zivot_andrews",
    "pelt",
    "binary_segmentation",
    "dynamic_programming",
    "mosum",
    "wild_binary_segmentation",
    "prophet",
)

MIN_POINTS = {
    "bai_perron": 10,
    "cusum": 15,
    "chow_test": 20,
    "zivot_andrews": 20,
    "pelt": 10,
    "binary_segmentation": 10,
    "dynamic_programming": 10,
    "mosum": 20,
    "wild_binary_segmentation": 30,
    "prophet": 30,
}


class DetectorError(ValueError):
    """A detector cannot run on the given input."""


@dataclass(frozen=True)
class Detection:
    """One raw break reported by a single method.

    ``index`` is the first observation of the new regime.
    """

    index: int
    confidence: float
    method_id: str
    statistic: float = math.nan

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class DetectorConfig:
    """Parameter bag shared by all detectors; ``None`` means method default."""

    significance_level: float = 0.05
    trend: str | None = None
    max_breaks: int = 5
    min_segment_size: float = 0.15
    model: str = "l2"
    penalty: float | None = None
    n_bkps: int | None = None
    min_size: int | None = None
    jump: int | None = None
    window: int | None = None
    width: float = 0.05
    n_changepoints: int = 25
    changepoint_range: float = 0.8
    changepoint_prior_scale: float = 0.02
    max_lags: int | None = None
    seed: int = 0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.significance_level not in (0.01, 0.05, 0.10):
            raise ValueError("significance_level must be 0.01, 0.05 or 0.10")
        if not 0.0 < self.min_segment_size < 0.5:
            raise ValueError("min_segment_size fraction must lie in (0, 0.5)")
        if not 0.0 < self.width < 0.5:
            raise ValueError("width fraction must lie in (0, 0.5)")
        if self.model not in ("l2", "l1", "normal"):
            raise ValueError(f"unsupported cost model {self.model!r}")
        if self.penalty is not None and self.penalty < 0:
            raise ValueError("penalty must be non-negative")
        if self.n_bkps is not None and self.n_bkps < 0:
            raise ValueError("n_bkps must be non-negative")

    def with_(self, **changes) -> "DetectorConfig":
        return replace(self, **changes)


def require_length(n: int, method_id: str) -> None:
    need = MIN_POINTS[method_id]
    if n < need:
        raise DetectorError(f"{method_id} needs at least {need} observations, got {n}")


def standardize(y: np.ndarray) -> np.ndarray:
    """Zero mean, unit variance; a constant series maps to zeros."""
    y = np.asarray(y, dtype=float)
    sd = y.std()
    if sd <= 1e-12 * max(1.0, float(np.abs(y).max())):
        return np.zeros_like(y)
    return (y - y.mean()) / sd


def clamp(x: float, lo: float, hi: float) -> float:
    return float(min(hi, max(lo, x)))


def boundary_distance(index: int, n: int) -> int:
    return min(index, n - index)
