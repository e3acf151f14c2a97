from __future__ import annotations

import numpy as np
import pytest

from breaklens.evaluation import bundled_dir, load_case
from breaklens.timeseries import TimeSeries


def staircase(seed: int, sigma: float = 0.2, seg: int = 30) -> TimeSeries:
    """Three levels 0/5/10 of ``seg`` points each; breaks at seg and 2*seg."""
    rng = np.random.default_rng(seed)
    y = np.repeat([0.0, 5.0, 10.0], seg) + rng.normal(0.0, sigma, 3 * seg)
    return TimeSeries(y, name=f"staircase-{seed}")


def step(n: int, k: int, lo: float, hi: float, sigma: float, seed: int = 0) -> TimeSeries:
    rng = np.random.default_rng(seed)
    y = np.where(np.arange(n) < k, lo, hi) + rng.normal(0.0, sigma, n)
    return TimeSeries(y, name="step")


@pytest.fixture(scope="session")
def nile() -> TimeSeries:
    return load_case(bundled_dir("benchmarks", "nile")).series


@pytest.fixture(scope="session")
def nexora_dir():
    return bundled_dir("nexora")


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
