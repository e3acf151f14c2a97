"""Break detectors keyed by method identifier."""

from __future__ import annotations

from typing import Callable

from breaklens.detectors.base import (
    METHOD_IDS,
    MIN_POINTS,
    DetectorConfig,
    DetectorError,
    Detection,
)
from breaklens.detectors.segmentation import (
    binseg_detect,
    dynp_detect,
    mosum_detect,
    pelt_detect,
    wbs_detect,
)
from breaklens.detectors.statistical import (
    bai_perron_detect,
    chow_detect,
    cusum_detect,
    zivot_andrews_detect,
)
from breaklens.detectors.trend import trend_detect
from breaklens.timeseries import TimeSeries

DETECTORS: dict[str, Callable[[TimeSeries, DetectorConfig], list[Detection]]] = {
    "bai_perron": bai_perron_detect,
    "cusum": cusum_detect,
    "chow_test": chow_detect,
    "zivot_andrews": zivot_andrews_detect,
    "pelt": pelt_detect,
    "binary_segmentation": binseg_detect,
    "dynamic_programming": dynp_detect,
    "mosum": mosum_detect,
    "wild_binary_segmentation": wbs_detect,
    "prophet": trend_detect,
}
assert tuple(DETECTORS) == METHOD_IDS


def run_method(method_id: str, ts: TimeSeries, cfg: DetectorConfig | None = None) -> list[Detection]:
    """Run one detector by identifier."""
    try:
        fn = DETECTORS[method_id]
    except KeyError:
        raise ValueError(f"unknown method {method_id!r}; expected one of {', '.join(METHOD_IDS)}") from None
    return fn(ts, cfg or DetectorConfig())


__all__ = [
    "DETECTORS",
    "METHOD_IDS",
    "MIN_POINTS",
    "Detection",
    "DetectorConfig",
    "DetectorError",
    "run_method",
]
