"""Ensemble structural break detection with LLM explanations grounded in
retrieved documents."""

from breaklens.autoselect import profile_data, select_method
from breaklens.detectors import DETECTORS, METHOD_IDS, Detection, DetectorConfig, run_method
from breaklens.ensemble import EnsembleBreak, EnsembleConfig, ensemble_detect
from breaklens.kernels import BACKEND
from breaklens.timeseries import TimeSeries, load_csv

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DETECTORS",
    "METHOD_IDS",
    "Detection",
    "DetectorConfig",
    "EnsembleBreak",
    "EnsembleConfig",
    "TimeSeries",
    "ensemble_detect",
    "load_csv",
    "profile_data",
    "run_method",
    "select_method",
]
