"""Benchmark harness: tolerance matching, detection metrics and the Nexora
retrieval scenario."""

from __future__ import annotations

import json
import logging
import math
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from breaklens.autoselect import select_method
from breaklens.detectors import METHOD_IDS, DetectorConfig, run_method
from breaklens.ensemble import EnsembleConfig, ensemble_detect
from breaklens.timeseries import TimeSeries, load_csv

log = logging.getLogger(__name__)

__all__ = [
    "BenchmarkCase",
    "CaseResult",
    "EvalResult",
    "match_breaks",
    "bundled_dir",
    "load_case",
    "load_cases",
    "predict",
    "run_benchmark",
    "format_table",
    "format_cases",
    "ScenarioReport",
    "run_rag_scenario",
]

STRATEGIES = ("auto", "ensemble") + METHOD_IDS


def bundled_dir(*parts: str) -> Path:
    return Path(str(resources.files("breaklens") / "data")).joinpath(*parts)


@dataclass(frozen=True)
class BenchmarkCase:
    name: str
    series: TimeSeries
    ground_truth_index: int
    event: str = ""
    source: str = ""
    description: str = ""
    ground_truth_date: str = ""

    def __post_init__(self):
        if not 0 <= self.ground_truth_index < self.series.n:
            raise ValueError(f"{self.name}: ground truth index {self.ground_truth_index} outside 0..{self.series.n - 1}")


@dataclass(frozen=True)
class CaseResult:
    name: str
    predicted: tuple[int, ...]
    truth: int
    tp: int
    fp: int
    fn: int
    error: float | None
    method: str = ""
    failure: str = ""


@dataclass
class EvalResult:
    strategy: str
    tol: int
    cases: list[CaseResult] = field(default_factory=list)

    @property
    def tp(self) -> int:
        return sum(c.tp for c in self.cases)

    @property
    def fp(self) -> int:
        return sum(c.fp for c in self.cases)

    @property
    def fn(self) -> int:
        return sum(c.fn for c in self.cases)

    @property
    def precision(self) -> float:
        d = self.tp + self.fp
        return self.tp / d if d else 0.0

    @property
    def recall(self) -> float:
        d = self.tp + self.fn
        return self.tp / d if d else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    @property
    def mte(self) -> float:
        errs = [c.error for c in self.cases if c.error is not None]
        return sum(errs) / len(errs) if errs else math.nan

    def as_dict(self) -> dict:
        return {
            "strategy": self.strategy, "tol": self.tol,
            "tp": self.tp, "fp": self.fp, "fn": self.fn,
            "precision": self.precision, "recall": self.recall, "f1": self.f1,
            "mte": None if math.isnan(self.mte) else self.mte,
            "cases": [
                {"name": c.name, "predicted": list(c.predicted), "truth": c.truth, "tp": c.tp, "fp": c.fp,
                 "fn": c.fn, "error": c.error, "method": c.method, "failure": c.failure}
                for c in self.cases
            ],
        }


def match_breaks(predicted, truth: int, tol: int = 3) -> tuple[int, int, int, float | None]:
    """Match one true break against predicted indices.

    The nearest prediction within ``tol`` is the hit (ties go to the earlier
    index); every other prediction is a false positive.
    Returns ``(tp, fp, fn, |error|)`` with ``error`` None when unmatched.
    """
    if tol < 0:
        raise ValueError("tol must be non-negative")
    pred = sorted(int(p) for p in predicted)
    best = None
    for p in pred:
        d = abs(p - truth)
        if d <= tol and (best is None or d < abs(best - truth)):
            best = p
    if best is None:
        return 0, len(pred), 1, None
    return 1, len(pred) - 1, 0, float(abs(best - truth))


def load_case(directory: str | Path) -> BenchmarkCase:
    d = Path(directory)
    meta = json.loads((d / "meta.json").read_text())
    ts = load_csv(d / "data.csv", "value", "date", name=meta.get("name", d.name))
    return BenchmarkCase(
        meta.get("name", d.name), ts, int(meta["ground_truth_index"]), meta.get("event", ""),
        meta.get("source", ""), meta.get("description", ""), str(meta.get("ground_truth_date", "")),
    )


def load_cases(directory: str | Path | None = None) -> list[BenchmarkCase]:
    """Every ``<case>/meta.json`` under ``directory`` (default: bundled cases)."""
    root = Path(directory) if directory is not None else bundled_dir("benchmarks")
    dirs = sorted(p.parent for p in root.glob("*/meta.json"))
    if not dirs:
        raise FileNotFoundError(f"no benchmark cases under {root}")
    return [load_case(d) for d in dirs]


def predict(ts: TimeSeries, strategy: str, v_min: int = 5, seed: int = 0) -> tuple[list[int], str]:
    """Predicted break indices for one strategy, plus the method actually used."""
    if strategy == "ensemble":
        overrides = {m: DetectorConfig(seed=seed) for m in METHOD_IDS}
        brks = ensemble_detect(ts, EnsembleConfig(v_min=v_min, overrides=overrides))
        return [b.index for b in brks], "ensemble"
    if strategy == "auto":
        method, _ = select_method(ts)
    elif strategy in METHOD_IDS:
        method = strategy
    else:
        raise ValueError(f"unknown strategy {strategy!r}; expected auto, ensemble or a method id")
    return [d.index for d in run_method(method, ts, DetectorConfig(seed=seed))], method


def run_benchmark(cases, strategy: str = "ensemble", tol: int = 3, v_min: int = 5, seed: int = 0,
                  max_workers: int = 1) -> EvalResult:
    """Detect and score every case; a failing case counts as a miss."""
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")

    def one(case: BenchmarkCase) -> CaseResult:
        try:
            pred, method = predict(case.series, strategy, v_min, seed)
        except Exception as exc:
            log.warning("case %s failed: %s", case.name, exc)
            return CaseResult(case.name, (), case.ground_truth_index, 0, 0, 1, None, failure=str(exc))
        tp, fp, fn, err = match_breaks(pred, case.ground_truth_index, tol)
        return CaseResult(case.name, tuple(sorted(pred)), case.ground_truth_index, tp, fp, fn, err, method)

    cases = list(cases)
    if max_workers > 1:
        with ThreadPoolExecutor(max_workers) as pool:
            results = list(pool.map(one, cases))
    else:
        results = [one(c) for c in cases]
    return EvalResult(strategy, tol, results)


def format_table(results, labels=None) -> str:
    """Markdown table with TP/FP/FN/Prec/Rec/F1 and MTE rows."""
    labels = labels or [r.strategy for r in results]
    lines = ["| Method | TP | FP | FN | Prec | Rec | F1 | MTE |", "|---|---:|---:|---:|---:|---:|---:|---:|"]
    for lab, r in zip(labels, results):
        mte = "n/a" if math.isnan(r.mte) else f"{r.mte:.2f}"
        lines.append(f"| {lab} | {r.tp} | {r.fp} | {r.fn} | {r.precision:.3f} | {r.recall:.3f} | {r.f1:.3f} | {mte} |")
    return "\n".join(lines) + "\n"


def format_cases(result: EvalResult) -> str:
    lines = ["| Case | Truth | Predicted | Method | TP | FP | FN |", "|---|---:|---|---|---:|---:|---:|"]
    for c in result.cases:
        pred = ", ".join(map(str, c.predicted)) or ("failed" if c.failure else "none")
        lines.append(f"| {c.name} | {c.truth} | {pred} | {c.method} | {c.tp} | {c.fp} | {c.fn} |")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Nexora retrieval scenario
# ---------------------------------------------------------------------------


@dataclass
class ScenarioReport:
    condition: str
    break_index: int | None
    break_date: str
    retrieved_ids: list[str]
    retrieved_titles: list[str]
    scores: list[float]
    prompt: str
    relevant_id: str
    documents_indexed: int

    @property
    def relevant_retrieved(self) -> bool:
        return self.relevant_id in self.retrieved_ids

    @property
    def passed(self) -> bool:
        if self.condition == "with_relevant":
            return self.relevant_retrieved
        return not self.relevant_retrieved and "Helios" not in self.prompt


def run_rag_scenario(condition: str = "with_relevant", fixture_dir: str | Path | None = None,
                     store_dir: str | Path | None = None, v_min: int = 5) -> ScenarioReport:
    """Ingest the Nexora corpus, detect the MAU break and retrieve context for it.

    Under ``clutter_only`` the launch memo is left out of the store.
    """
    from breaklens.explain import build_context, build_query, render_rag_prompt
    from breaklens.rag import VectorStore

    if condition not in ("with_relevant", "clutter_only"):
        raise ValueError("condition must be 'with_relevant' or 'clutter_only'")
    base = Path(fixture_dir) if fixture_dir is not None else bundled_dir("nexora")
    if not (base / "mau.csv").is_file() or not (base / "corpus").is_dir():
        raise FileNotFoundError(f"Nexora fixture missing under {base}")
    meta = json.loads((base / "meta.json").read_text())
    relevant = meta["relevant_document"]
    files = sorted((base / "corpus").glob("*.txt"))
    if condition == "clutter_only":
        files = [f for f in files if f.stem != relevant]

    ts = load_csv(base / "mau.csv", "value", "date", name="nexora_mau")
    brks = ensemble_detect(ts, EnsembleConfig(v_min=v_min))
    if not brks:
        return ScenarioReport(condition, None, "", [], [], [], "", relevant, len(files))
    truth = int(meta["ground_truth_index"])
    brk = min(brks, key=lambda b: abs(b.index - truth))
    date = ts.date_at(brk.index)

    tmp = None
    if store_dir is None:
        tmp = tempfile.TemporaryDirectory()
        store_dir = tmp.name
    try:
        store = VectorStore(store_dir)
        store.add_documents(files)
        ctx = build_context(ts, brk, meta["description"])
        query = build_query(meta["description"], ctx.direction, ctx.break_date)
        ranked = store.retrieve(query, date)
        prompt = render_rag_prompt(ctx, ranked)
        docs = store.stats()["total_documents"]
    finally:
        if tmp is not None:
            tmp.cleanup()
    return ScenarioReport(
        condition, brk.index, ctx.break_date,
        [r.chunk.doc_id for r in ranked], [r.chunk.title for r in ranked], [r.score for r in ranked],
        prompt.system + "\n" + prompt.user, relevant, docs,
    )
