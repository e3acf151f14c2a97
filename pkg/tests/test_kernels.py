from __future__ import annotations

import os
import subprocess
import sys

import numpy as np
import pytest

from breaklens import kernels
from breaklens.kernels import _pykernels

from oracles import optimal_partitioning

try:
    from breaklens.kernels import _ckernels
except ImportError:
    _ckernels = None

needs_c = pytest.mark.skipif(_ckernels is None, reason="compiled extension not built")


def series(n, seed):
    rng = np.random.default_rng(seed)
    k = rng.integers(1, 4)
    lv = rng.normal(0, 2, k + 1)
    b = np.sort(rng.choice(np.arange(5, n - 5), k, replace=False))
    y = np.repeat(lv, np.diff([0, *b, n]))
    return y + rng.normal(0, 1, n)


def test_backend_reported():
    assert kernels.BACKEND in ("cython", "python")


def test_env_forces_python():
    env = dict(os.environ, BREAKLENS_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import breaklens; print(breaklens.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@needs_c
@pytest.mark.parametrize("model", ["l2", "normal"])
@pytest.mark.parametrize("seed", range(10))
def test_pelt_parity(model, seed):
    y = series(120, seed)
    pen = 3 * np.log(120)
    bp, tp = _pykernels.pelt(y, model, pen, 2, 1)
    bc, tc = _ckernels.pelt(y, model, pen, 2, 1)
    assert list(bp) == list(bc)
    assert tp == pytest.approx(tc, rel=1e-10, abs=1e-10)


@needs_c
@pytest.mark.parametrize("model", ["l2", "normal"])
def test_segment_neighbourhood_parity(model):
    y = series(80, 3)
    cp, bp = _pykernels.segment_neighbourhood(y, model, 4, 3, 2)
    cc, bc = _ckernels.segment_neighbourhood(y, model, 4, 3, 2)
    np.testing.assert_allclose(cp, cc, rtol=1e-10)
    assert [list(b) if b is not None else None for b in bp] == [list(b) if b is not None else None for b in bc]


@needs_c
def test_best_splits_parity():
    y = series(300, 4)
    rng = np.random.default_rng(0)
    s = rng.integers(0, 280, 500).astype(np.int64)
    e = np.minimum(s + rng.integers(3, 60, 500), 300).astype(np.int64)
    ip, gp = _pykernels.best_splits(y, s, e, 2)
    ic, gc = _ckernels.best_splits(y, s, e, 2)
    np.testing.assert_array_equal(ip, ic)
    np.testing.assert_allclose(gp, gc, rtol=1e-10, atol=1e-10)


@needs_c
def test_trend_cd_parity():
    n = 150
    tt = np.arange(n) / (n - 1)
    y = np.where(tt < 0.5, 0.0, 2 * (tt - 0.5)) + np.random.default_rng(1).normal(0, 0.05, n)
    knots = np.arange(5, 120, 5).astype(np.int64)
    rp = _pykernels.trend_cd(tt, y, knots, 0.05, 1e-6, 10_000)
    rc = _ckernels.trend_cd(tt, y, knots, 0.05, 1e-6, 10_000)
    assert rp[0] == pytest.approx(rc[0], abs=1e-9)
    assert rp[1] == pytest.approx(rc[1], abs=1e-9)
    np.testing.assert_allclose(rp[2], rc[2], atol=1e-9)
    assert rp[3] == rc[3]


@pytest.mark.parametrize("impl", [_pykernels, _ckernels], ids=["python", "cython"])
@pytest.mark.parametrize("jump", [1, 3])
def test_pelt_matches_optimal_partitioning(impl, jump):
    if impl is None:
        pytest.skip("compiled extension not built")
    for seed in range(8):
        y = series(40, seed)
        bk, total = impl.pelt(y, "l2", 6.0, 3, jump)
        if jump == 1:
            ref, rbk = optimal_partitioning(y, 6.0, 3)
            assert total == pytest.approx(ref, rel=1e-9)
            assert bk[:-1] == rbk
        assert all(b % jump == 0 for b in bk[:-1])


def test_l1_routes_to_python():
    y = series(60, 2)
    bk, _ = kernels.pelt(y, "l1", 5.0, 2, 1)
    assert bk == _pykernels.pelt(y, "l1", 5.0, 2, 1)[0]


def test_admissible_positions():
    assert kernels.admissible_positions(10, 2, 1) == [2, 3, 4, 5, 6, 7, 8]
    assert kernels.admissible_positions(10, 2, 3) == [3, 6]
