"""Hot numerical kernels with a compiled backend and a pure-Python fallback.

The compiled extension is used when it imports cleanly and the environment
variable ``BREAKLENS_PURE_PYTHON`` is unset. The ``l1`` cost always runs on
the Python backend because it has no prefix-sum form.
"""

from __future__ import annotations

import os

from breaklens.kernels import _pykernels

_ck = None
if not os.environ.get("BREAKLENS_PURE_PYTHON"):
    try:
        from breaklens.kernels import _ckernels as _ck
    except ImportError:  # extension not built
        _ck = None

BACKEND = "cython" if _ck is not None else "python"

admissible_positions = _pykernels.admissible_positions


def _impl(model: str = "l2"):
    if _ck is not None and model in ("l2", "normal"):
        return _ck
    return _pykernels


def pelt(y, model, pen, min_size, jump):
    return _impl(model).pelt(y, model, float(pen), int(min_size), int(jump))


def segment_neighbourhood(y, model, max_bkps, min_size, jump):
    return _impl(model).segment_neighbourhood(y, model, int(max_bkps), int(min_size), int(jump))


def best_splits(y, starts, ends, min_size):
    return _impl().best_splits(y, starts, ends, int(min_size))


def trend_cd(tt, y, knots, lam, tol=1e-6, max_sweeps=10_000):
    return _impl().trend_cd(tt, y, knots, float(lam), float(tol), int(max_sweeps))


__all__ = ["BACKEND", "pelt", "segment_neighbourhood", "best_splits", "trend_cd", "admissible_positions"]
