"""Compare the compiled kernels with the pure-Python fallback.

Usage: ``python benchmarks/bench_kernels.py [--repeat 3]``

Each kernel runs on the same seeded inputs under both backends; the script
checks that results agree and reports the best wall time of ``--repeat`` runs.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from breaklens.kernels import _pykernels

try:
    from breaklens.kernels import _ckernels
except ImportError:
    _ckernels = None


def _series(n, k, seed):
    rng = np.random.default_rng(seed)
    levels = rng.normal(0, 3, k + 1)
    bounds = np.linspace(0, n, k + 2).astype(int)
    y = np.concatenate([np.full(b - a, lv) for a, b, lv in zip(bounds[:-1], bounds[1:], levels)])
    return y + rng.normal(0, 1, n)


def _best(fn, repeat):
    out, best = None, float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases():
    y500 = _series(500, 4, 0)
    y2000 = _series(2000, 8, 1)
    yield "pelt l2 n=500", lambda m: m.pelt(y500, "l2", 3 * np.log(500), 2, 1)
    yield "pelt l2 n=2000", lambda m: m.pelt(y2000, "l2", 3 * np.log(2000), 2, 1)
    yield "pelt normal n=500", lambda m: m.pelt(y500, "normal", 3 * np.log(500), 2, 1)
    yield "segneigh l2 n=300 k=5", lambda m: m.segment_neighbourhood(y500[:300], "l2", 5, 2, 1)

    rng = np.random.default_rng(2)
    starts = rng.integers(0, 1900, 4000)
    ends = np.minimum(starts + rng.integers(20, 400, 4000), 2000)
    yield "best_splits 4000 intervals", lambda m: m.best_splits(y2000, starts.astype(np.int64), ends.astype(np.int64), 2)

    n = 400
    tt = np.arange(n) / (n - 1)
    yt = np.where(tt < 0.5, tt, 0.5 + 3 * (tt - 0.5)) + np.random.default_rng(3).normal(0, 0.05, n)
    knots = np.unique(np.round(np.arange(1, 26) * 0.8 * n / 26).astype(np.int64))
    yield "trend_cd n=400 K=25", lambda m: m.trend_cd(tt, yt, knots, float(np.std(yt, ddof=1) / (0.02 * n)), 1e-6, 10_000)


def _agree(a, b):
    if isinstance(a, tuple):
        return len(a) == len(b) and all(_agree(x, y) for x, y in zip(a, b))
    if isinstance(a, dict):
        return a.keys() == b.keys() and all(_agree(a[k], b[k]) for k in a)
    if isinstance(a, list) and a and isinstance(a[0], (list, tuple, np.ndarray)):
        return len(a) == len(b) and all(_agree(x, y) for x, y in zip(a, b))
    if isinstance(a, (list, np.ndarray)):
        a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
        return a.shape == b.shape and np.allclose(a, b, rtol=1e-8, atol=1e-8)
    if isinstance(a, float):
        return np.isclose(a, b, rtol=1e-9, atol=1e-9)
    return a == b


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled extension not built; only the Python backend is available")
    print(f"{'kernel':<28} {'python (s)':>11} {'cython (s)':>11} {'speedup':>8}  agree")
    for name, fn in cases():
        tp, rp = _best(lambda: fn(_pykernels), args.repeat)
        if _ckernels is None:
            print(f"{name:<28} {tp:>11.4f} {'-':>11} {'-':>8}  -")
            continue
        tc, rc = _best(lambda: fn(_ckernels), args.repeat)
        print(f"{name:<28} {tp:>11.4f} {tc:>11.4f} {tp / tc:>7.1f}x  {'yes' if _agree(rp, rc) else 'NO'}")


if __name__ == "__main__":
    main()
