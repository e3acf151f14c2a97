from __future__ import annotations

import json
import math

import numpy as np
import pytest

from breaklens.autoselect import select_method
from breaklens.evaluation import (
    BenchmarkCase,
    EvalResult,
    CaseResult,
    format_table,
    load_cases,
    match_breaks,
    run_benchmark,
    run_rag_scenario,
)
from breaklens.timeseries import TimeSeries

from conftest import step


class TestMatch:
    def test_boundary(self):
        assert match_breaks([30], 27, 3) == (1, 0, 0, 3.0)

    def test_outside(self):
        assert match_breaks([31], 27) == (0, 1, 1, None)

    def test_empty(self):
        assert match_breaks([], 27) == (0, 0, 1, None)

    def test_nearest_wins(self):
        assert match_breaks([25, 28, 40], 27) == (1, 2, 0, 1.0)

    def test_tie_goes_earlier(self):
        assert match_breaks([25, 29], 27) == (1, 1, 0, 2.0)

    def test_negative_tol(self):
        with pytest.raises(ValueError):
            match_breaks([1], 1, -1)


def test_metric_identities():
    r = EvalResult("x", 3, [
        CaseResult("a", (5,), 5, 1, 0, 0, 0.0),
        CaseResult("b", (9, 20), 10, 1, 1, 0, 1.0),
        CaseResult("c", (), 7, 0, 0, 1, None),
        CaseResult("d", (3,), 30, 0, 1, 1, None),
    ])
    assert (r.tp, r.fp, r.fn) == (2, 2, 2)
    assert r.precision == 0.5 and r.recall == 0.5 and r.f1 == 0.5
    assert r.mte == 0.5
    empty = EvalResult("y", 3, [CaseResult("c", (), 7, 0, 0, 1, None)])
    assert empty.precision == 0.0 and empty.f1 == 0.0 and math.isnan(empty.mte)


def test_bundled_cases():
    cases = load_cases()
    assert len(cases) == 7
    by = {c.name: c for c in cases}
    assert by["nile"].ground_truth_index == 27 and by["nile"].series.label(27) == "1898"
    for c in cases:
        assert 0 <= c.ground_truth_index < c.series.n
        assert c.source


def test_case_index_validated():
    with pytest.raises(ValueError):
        BenchmarkCase("bad", TimeSeries(np.zeros(5)), 9)


def test_tol_zero_counts_exact_hits():
    cases = [BenchmarkCase(f"s{i}", step(80, 40, 0, 6, 0.05, seed=i), 40) for i in range(3)]
    strict = run_benchmark(cases, "pelt", tol=0)
    loose = run_benchmark(cases, "pelt", tol=3)
    exact = sum(40 in c.predicted for c in loose.cases)
    assert strict.tp == exact
    assert strict.tp <= loose.tp


def test_failed_case_counts_as_miss():
    cases = [BenchmarkCase("short", TimeSeries(np.arange(12.0)), 6)]
    r = run_benchmark(cases, "prophet")
    assert (r.tp, r.fn) == (0, 1) and r.cases[0].failure


def test_auto_equals_forced_method():
    cases = load_cases()
    auto = run_benchmark(cases, "auto")
    for case, res in zip(cases, auto.cases):
        method, _ = select_method(case.series)
        forced = run_benchmark([case], method).cases[0]
        assert (forced.predicted, forced.tp, forced.fp, forced.fn) == (res.predicted, res.tp, res.fp, res.fn)


def test_deterministic_and_parallel():
    cases = load_cases()
    a = run_benchmark(cases, "ensemble").as_dict()
    b = run_benchmark(cases, "ensemble", max_workers=4).as_dict()
    assert json.dumps(a) == json.dumps(b)


def test_table_layout():
    r = run_benchmark([BenchmarkCase("s", step(80, 40, 0, 6, 0.1), 40)], "pelt")
    table = format_table([r])
    assert table.splitlines()[0] == "| Method | TP | FP | FN | Prec | Rec | F1 | MTE |"
    assert table.splitlines()[2].startswith("| pelt | 1 | 0 | 0 | 1.000 | 1.000 | 1.000 |")


class TestNexora:
    def test_mau_break_near_july_2022(self):
        rep = run_rag_scenario("with_relevant")
        assert rep.break_index is not None and abs(rep.break_index - 30) <= 2
        assert rep.documents_indexed == 31
        assert rep.relevant_retrieved and rep.passed
        assert len(rep.retrieved_ids) == 3

    def test_clutter_only(self):
        rep = run_rag_scenario("clutter_only")
        assert rep.documents_indexed == 30
        assert not rep.relevant_retrieved
        assert "Helios" not in rep.prompt
        assert rep.passed

    def test_bad_condition(self):
        with pytest.raises(ValueError):
            run_rag_scenario("other")

    def test_missing_fixture(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            run_rag_scenario(fixture_dir=tmp_path)
