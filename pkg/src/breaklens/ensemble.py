"""Consensus break detection: run every detector, cluster the pooled
detections in time, keep clusters backed by enough distinct methods."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from breaklens.detectors import DETECTORS, METHOD_IDS, MIN_POINTS, DetectorConfig, Detection
from breaklens.timeseries import TimeSeries

log = logging.getLogger(__name__)

__all__ = [
    "EnsembleConfig",
    "DetectionCluster",
    "EnsembleBreak",
    "adaptive_epsilon",
    "cluster_detections",
    "aggregate_cluster",
    "run_detectors",
    "ensemble_detect",
    "MAGNITUDE_WINDOW",
]

MAGNITUDE_WINDOW = 30


@dataclass(frozen=True)
class EnsembleConfig:
    v_min: int = 5
    epsilon_override: float | None = None
    methods: tuple[str, ...] = METHOD_IDS
    overrides: dict = field(default_factory=dict)  # method_id -> DetectorConfig
    max_workers: int = 1

    def __post_init__(self):
        if self.v_min < 1:
            raise ValueError("v_min must be at least 1")
        unknown = set(self.methods) - set(METHOD_IDS)
        if unknown:
            raise ValueError(f"unknown methods: {sorted(unknown)}")


@dataclass(frozen=True)
class DetectionCluster:
    members: tuple[Detection, ...]

    @property
    def methods(self) -> tuple[str, ...]:
        return tuple(m for m in METHOD_IDS if any(d.method_id == m for d in self.members))

    @property
    def votes(self) -> int:
        return len({d.method_id for d in self.members})

    @property
    def span(self) -> tuple[int, int]:
        idx = [d.index for d in self.members]
        return min(idx), max(idx)


@dataclass(frozen=True)
class EnsembleBreak:
    location: float
    confidence: float
    votes: int
    methods: tuple[str, ...]
    span: tuple[int, int]
    magnitude: float = math.nan
    direction: str = ""
    members: tuple[Detection, ...] = ()

    @property
    def index(self) -> int:
        """Location rounded half up to an observation index."""
        return int(math.floor(self.location + 0.5))


def adaptive_epsilon(n: int) -> float:
    return min(5.0, max(2.0, n / 40.0))


def cluster_detections(detections, epsilon: float) -> list[DetectionCluster]:
    """Single-linkage clustering of 1-D indices: split where gaps exceed ``epsilon``."""
    pool = sorted(detections, key=lambda d: (d.index, METHOD_IDS.index(d.method_id), -d.confidence))
    clusters: list[list[Detection]] = []
    for d in pool:
        if clusters and d.index - clusters[-1][-1].index <= epsilon:
            clusters[-1].append(d)
        else:
            clusters.append([d])
    return [DetectionCluster(tuple(c)) for c in clusters]


def aggregate_cluster(cluster: DetectionCluster) -> EnsembleBreak:
    """Confidence-weighted location and mean confidence of a cluster."""
    t = np.array([d.index for d in cluster.members], dtype=float)
    c = np.array([d.confidence for d in cluster.members], dtype=float)
    total = float(c.sum())
    loc = float(t.mean()) if total == 0 else float((c * t).sum() / total)
    lo, hi = cluster.span
    loc = min(max(loc, lo), hi)
    return EnsembleBreak(loc, float(c.mean()), cluster.votes, cluster.methods, cluster.span, members=cluster.members)


def break_magnitude(values, index: int, window: int = MAGNITUDE_WINDOW) -> float:
    """Mean of up to ``window`` points from ``index`` minus the mean before it."""
    y = np.asarray(values, dtype=float)
    before, after = y[max(0, index - window):index], y[index:index + window]
    if before.size == 0 or after.size == 0:
        return math.nan
    return float(after.mean() - before.mean())


def run_detectors(ts: TimeSeries, cfg: EnsembleConfig | None = None):
    """Run the enabled detectors; failures are logged and yield no detections.

    Returns ``(detections, per_method)`` where ``per_method`` maps each method
    to its list of detections or to the error message.
    """
    cfg = cfg or EnsembleConfig()

    def one(m):
        if ts.n < MIN_POINTS[m]:
            return m, f"skipped: needs {MIN_POINTS[m]} observations"
        try:
            return m, DETECTORS[m](ts, cfg.overrides.get(m, DetectorConfig()))
        except Exception as exc:  # skip-and-log policy
            log.warning("method %s failed: %s", m, exc)
            return m, f"failed: {exc}"

    if cfg.max_workers > 1:
        with ThreadPoolExecutor(cfg.max_workers) as pool:
            results = list(pool.map(one, cfg.methods))
    else:
        results = [one(m) for m in cfg.methods]
    per_method = dict(results)
    pooled = [d for m in cfg.methods if isinstance(per_method[m], list) for d in per_method[m]]
    return pooled, per_method


def ensemble_detect(ts: TimeSeries, cfg: EnsembleConfig | None = None, detections=None) -> list[EnsembleBreak]:
    """Consensus breaks with at least ``v_min`` distinct voting methods.

    ``detections`` may be passed to reuse an earlier run of the detectors.
    """
    cfg = cfg or EnsembleConfig()
    if detections is None:
        runnable = [m for m in cfg.methods if ts.n >= MIN_POINTS[m]]
        if not runnable:
            raise ValueError(f"no enabled method can run on n={ts.n}")
        detections, _ = run_detectors(ts, cfg)
    eps = cfg.epsilon_override if cfg.epsilon_override is not None else adaptive_epsilon(ts.n)
    out = []
    for cl in cluster_detections(detections, eps):
        if cl.votes < cfg.v_min:
            continue
        br = aggregate_cluster(cl)
        mag = break_magnitude(ts.values, br.index)
        direction = "" if math.isnan(mag) else ("upward" if mag >= 0 else "downward")
        out.append(EnsembleBreak(br.location, br.confidence, br.votes, br.methods, br.span, mag, direction, br.members))
    return sorted(out, key=lambda b: b.location)
