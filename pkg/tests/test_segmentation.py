from __future__ import annotations

import math

import numpy as np
import pytest

from breaklens.detectors import DetectorConfig
from breaklens.detectors.base import DetectorError, standardize
from breaklens.detectors.segmentation import (
    PenaltySpec,
    binseg_detect,
    dynp_detect,
    mosum_detect,
    mosum_statistic,
    pelt_detect,
    pelt_segment,
    wbs_detect,
)
from breaklens.timeseries import TimeSeries

from conftest import staircase, step
from oracles import brute_m_breaks, enumerate_penalized, mosum_direct, optimal_partitioning, partition_cost, seg_cost


def random_series(rng, n):
    k = int(rng.integers(0, 4))
    cuts = np.sort(rng.choice(np.arange(2, n - 1), k, replace=False)) if k else np.array([], int)
    lv = rng.normal(0, 2, k + 1)
    return np.repeat(lv, np.diff([0, *cuts, n])) + rng.normal(0, 1, n)


class TestPenaltySpec:
    def test_exactly_one_mode(self):
        PenaltySpec(beta=1.0)
        PenaltySpec(n_bkps=2)
        with pytest.raises(ValueError):
            PenaltySpec()
        with pytest.raises(ValueError):
            PenaltySpec(beta=1.0, n_bkps=1)


class TestPelt:
    @pytest.mark.parametrize("model", ["l2", "l1", "normal"])
    def test_literal_enumeration_small_n(self, model):
        rng = np.random.default_rng(11)
        for _ in range(15):
            n = int(rng.integers(6, 14))
            y = random_series(rng, n)
            pen = float(rng.uniform(0.5, 6.0))
            bk, total = pelt_segment(y, model, pen, 2, 1)
            ref, rbk = enumerate_penalized(y, pen, 2, model)
            assert total == pytest.approx(ref, rel=1e-9, abs=1e-9)
            assert partition_cost(y, bk, model) + pen * len(bk) == pytest.approx(ref, rel=1e-9, abs=1e-9)

    def test_matches_unpruned_recursion(self):
        rng = np.random.default_rng(12)
        for _ in range(30):
            n = int(rng.integers(10, 61))
            y = standardize(random_series(rng, n))
            bk, total = pelt_segment(y, "l2", 3 * math.log(n), 2, 1)
            ref, rbk = optimal_partitioning(y, 3 * math.log(n), 2)
            assert total == pytest.approx(ref, rel=1e-9)
            assert bk == rbk

    def test_staircase(self):
        dets = pelt_detect(staircase(0))
        assert [abs(d.index - t) <= 1 for d, t in zip(dets, (30, 60))] == [True, True]
        assert len(dets) == 2
        assert all(0 <= d.confidence <= 1 for d in dets)

    def test_constant_no_breaks(self):
        assert pelt_detect(TimeSeries(np.full(50, 3.0))) == []

    def test_penalty_monotone(self):
        y = TimeSeries(random_series(np.random.default_rng(3), 120))
        counts = [len(pelt_detect(y, DetectorConfig(penalty=p))) for p in (0.5, 2, 5, 10, 30, 100)]
        assert counts == sorted(counts, reverse=True)

    def test_min_size_too_large(self):
        with pytest.raises(DetectorError):
            pelt_detect(TimeSeries(np.arange(20.0)), DetectorConfig(min_size=11))

    def test_spacing_respected(self):
        ts = TimeSeries(random_series(np.random.default_rng(5), 100))
        dets = pelt_detect(ts, DetectorConfig(penalty=1.0, min_size=4))
        b = [0, *[d.index for d in dets], 100]
        assert min(np.diff(b)) >= 4


class TestBinseg:
    def test_first_split_is_argmax(self):
        ts = step(100, 50, 0, 8, 1.0, seed=1)
        d = binseg_detect(ts, DetectorConfig(n_bkps=1, jump=1))
        z = standardize(ts.values)
        gains = {k: seg_cost(z, 0, 100) - seg_cost(z, 0, k) - seg_cost(z, k, 100) for k in range(2, 99)}
        assert d[0].index == max(gains, key=gains.get)

    def test_single_step_default_jump(self):
        d = binseg_detect(step(100, 50, 0, 8, 1.0, seed=2))
        assert any(abs(x.index - 50) <= 5 for x in d)
        assert all(0.1 <= x.confidence <= 0.95 for x in d)

    def test_zero_breaks(self):
        assert binseg_detect(step(100, 50, 0, 8, 1.0), DetectorConfig(n_bkps=0)) == []


class TestDynp:
    def test_brute_force_m_breaks(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            n = int(rng.integers(10, 41))
            y = random_series(rng, n)
            z = standardize(y)
            m = int(rng.integers(1, 4))
            dets = dynp_detect(TimeSeries(y), DetectorConfig(n_bkps=m, min_size=2))
            ref, _ = brute_m_breaks(z, m, 2)
            assert partition_cost(z, [d.index for d in dets]) == pytest.approx(ref, rel=1e-9, abs=1e-12)

    def test_staircase_matches_pelt(self):
        ts = staircase(1)
        assert [d.index for d in dynp_detect(ts, DetectorConfig(n_bkps=2))] == [d.index for d in pelt_detect(ts)]

    def test_max_feasible_forces_min_size(self):
        dets = dynp_detect(TimeSeries(np.random.default_rng(0).normal(size=12)), DetectorConfig(n_bkps=5, min_size=2))
        assert [d.index for d in dets] == [2, 4, 6, 8, 10]

    def test_infeasible(self):
        with pytest.raises(DetectorError):
            dynp_detect(TimeSeries(np.random.default_rng(0).normal(size=12)), DetectorConfig(n_bkps=6, min_size=2))

    def test_confidence_bounds(self):
        for d in dynp_detect(staircase(2), DetectorConfig(n_bkps=4)):
            assert 0.15 <= d.confidence <= 0.95


class TestMosum:
    @pytest.mark.parametrize("seed", range(5))
    def test_statistic_direct(self, seed):
        y = random_series(np.random.default_rng(seed), 150)
        ks, T = mosum_statistic(y, 15)
        rk, rT = mosum_direct(y, 15)
        np.testing.assert_array_equal(ks, rk)
        np.testing.assert_allclose(T, rT, rtol=1e-10)

    def test_step(self):
        d = mosum_detect(step(200, 100, 0, 6, 1.0, seed=4), DetectorConfig(window=20))
        assert len(d) == 1 and abs(d[0].index - 100) <= 3

    def test_constant(self):
        assert mosum_detect(TimeSeries(np.full(60, 2.0))) == []

    def test_window_too_large(self):
        with pytest.raises(DetectorError):
            mosum_detect(TimeSeries(np.arange(40.0)), DetectorConfig(window=20))


class TestWbs:
    @pytest.mark.parametrize("seed", range(10))
    def test_step_within_two(self, seed):
        d = wbs_detect(step(120, 60, 0, 8, 1.0, seed=100 + seed), DetectorConfig(seed=seed))
        assert any(abs(x.index - 60) <= 2 for x in d)

    def test_deterministic(self):
        ts = TimeSeries(random_series(np.random.default_rng(9), 150))
        assert wbs_detect(ts, DetectorConfig(seed=3)) == wbs_detect(ts, DetectorConfig(seed=3))

    def test_confidence_formula(self):
        ts = step(120, 60, 0, 8, 1.0, seed=7)
        w = max(10, int(0.05 * 120))
        for d in wbs_detect(ts):
            assert d.confidence == pytest.approx(0.65 + 0.25 * min(1.0, min(d.index, 120 - d.index) / w))
