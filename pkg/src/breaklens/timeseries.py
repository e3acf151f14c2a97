"""Time-series container, CSV loading and the regression primitives shared
by the detectors (OLS, ADF unit-root test, sample autocorrelation).

Index convention: observations are addressed 0..n-1. A break at index ``k``
means the new regime starts at observation ``k``; the segments are
``[0, k)`` and ``[k, n)``, so admissible break indices are ``1..n-1``.
"""

from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.stats import norm

from breaklens._tables import MACKINNON_BOUNDS, MACKINNON_LARGEP, MACKINNON_SMALLP

__all__ = [
    "TimeSeries",
    "Segmentation",
    "OlsFit",
    "UnitRootResult",
    "DataError",
    "DegenerateRegressionError",
    "load_csv",
    "ols_fit",
    "adf_test",
    "acf",
    "mackinnon_pvalue",
]


class DataError(ValueError):
    """Input data cannot be turned into a valid series."""


class DegenerateRegressionError(ValueError):
    """Regression is rank deficient or has a zero-variance residual."""


@dataclass(frozen=True)
class TimeSeries:
    """Ordered univariate observations.

    ``timestamps`` holds either calendar dates or integer indices; the
    detectors only ever use the positional index, dates are metadata.
    """

    values: np.ndarray
    timestamps: tuple = ()
    name: str = "series"

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or values.size < 1:
            raise DataError("a series needs at least one observation")
        if not np.all(np.isfinite(values)):
            raise DataError("series contains non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        stamps = tuple(self.timestamps) if len(self.timestamps) else tuple(range(1, values.size + 1))
        if len(stamps) != values.size:
            raise DataError("timestamps and values differ in length")
        for a, b in zip(stamps, stamps[1:]):
            if not a < b:
                raise DataError(f"timestamps must be strictly increasing ({a!r} >= {b!r})")
        object.__setattr__(self, "timestamps", stamps)

    @property
    def n(self) -> int:
        return int(self.values.size)

    @property
    def has_dates(self) -> bool:
        return isinstance(self.timestamps[0], dt.date)

    def __len__(self) -> int:
        return self.n

    def label(self, index: int) -> str:
        """Human-readable timestamp for a (clipped) positional index."""
        index = min(max(int(index), 0), self.n - 1)
        stamp = self.timestamps[index]
        return stamp.isoformat() if isinstance(stamp, dt.date) else str(stamp)

    def date_at(self, index: int) -> dt.date | None:
        if not self.has_dates:
            return None
        index = min(max(int(index), 0), self.n - 1)
        return self.timestamps[index]


@dataclass(frozen=True)
class Segmentation:
    """Sorted break indices and the contiguous segments they imply."""

    n: int
    break_indices: tuple[int, ...] = ()

    def __post_init__(self):
        idx = tuple(int(i) for i in self.break_indices)
        if list(idx) != sorted(set(idx)):
            raise ValueError("break indices must be sorted and unique")
        if idx and (idx[0] < 1 or idx[-1] > self.n - 1):
            raise ValueError("break indices must lie in 1..n-1")
        object.__setattr__(self, "break_indices", idx)

    @property
    def bounds(self) -> list[int]:
        return [0, *self.break_indices, self.n]

    def segments(self) -> list[range]:
        b = self.bounds
        return [range(b[i], b[i + 1]) for i in range(len(b) - 1)]


@dataclass(frozen=True)
class OlsFit:
    coefficients: np.ndarray
    residuals: np.ndarray
    residual_variance: float
    rss: float
    k: int


@dataclass(frozen=True)
class UnitRootResult:
    statistic: float
    p_value: float
    lags_used: int
    nobs: int = 0
    trend: str = "c"


_TREND_K = {"n": 0, "c": 1, "ct": 2}


def _parse_stamp(raw: str) -> dt.date | int:
    raw = raw.strip()
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return dt.date.fromisoformat(raw[:10])
    except ValueError as exc:
        raise DataError(f"cannot parse timestamp {raw!r}") from exc


def load_csv(
    path: str | Path,
    value_col: str = "value",
    date_col: str | None = None,
    missing_policy: str = "drop",
    name: str | None = None,
) -> TimeSeries:
    """Load a series from a headed CSV file.

    Parameters
    ----------
    path : path-like
        CSV file with a header row.
    value_col : str
        Column holding the observations.
    date_col : str, optional
        Column holding ISO-8601 dates or integer stamps. Without it the
        series is indexed 1..n in file order.
    missing_policy : {'drop', 'forward_fill', 'error'}
        What to do with empty or non-numeric values.
    """
    if missing_policy not in ("drop", "forward_fill", "error"):
        raise ValueError(f"unknown missing_policy {missing_policy!r}")
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError(f"{path}: missing header row")
        if value_col not in reader.fieldnames:
            raise DataError(f"{path}: column {value_col!r} not found in {reader.fieldnames}")
        if date_col is not None and date_col not in reader.fieldnames:
            raise DataError(f"{path}: column {date_col!r} not found in {reader.fieldnames}")
        rows = list(reader)

    stamps: list = []
    values: list[float] = []
    last: float | None = None
    for lineno, row in enumerate(rows, start=2):
        raw = (row.get(value_col) or "").strip()
        try:
            value = float(raw)
        except ValueError:
            value = math.nan
        if not math.isfinite(value):
            if missing_policy == "error":
                raise DataError(f"{path}:{lineno}: missing value {raw!r}")
            if missing_policy == "drop" or last is None:
                continue
            value = last
        last = value
        stamps.append(_parse_stamp(row[date_col]) if date_col else None)
        values.append(value)

    if not values:
        raise DataError(f"{path}: no usable observations")
    if date_col:
        order = sorted(range(len(values)), key=lambda i: stamps[i])
        stamps = [stamps[i] for i in order]
        values = [values[i] for i in order]
        return TimeSeries(np.asarray(values), tuple(stamps), name or path.stem)
    return TimeSeries(np.asarray(values), name=name or path.stem)


def trend_matrix(n: int, trend: str) -> np.ndarray:
    if trend not in _TREND_K:
        raise ValueError(f"trend must be one of {sorted(_TREND_K)}, got {trend!r}")
    cols = []
    if trend in ("c", "ct"):
        cols.append(np.ones(n))
    if trend == "ct":
        cols.append(np.arange(1, n + 1, dtype=float))
    return np.column_stack(cols) if cols else np.empty((n, 0))


def _lstsq_qr(X: np.ndarray, y: np.ndarray):
    """QR least squares; raises on numerical rank deficiency."""
    q, r = np.linalg.qr(X)
    diag = np.abs(np.diag(r))
    scale = max(diag.max(initial=0.0), 1.0)
    if diag.size and diag.min() <= 1e-10 * scale:
        raise DegenerateRegressionError("design matrix is rank deficient")
    beta = np.linalg.solve(r, q.T @ y) if X.shape[1] else np.empty(0)
    return beta, r


def ols_fit(y: Sequence[float], trend: str = "c") -> OlsFit:
    """Regress ``y`` on the deterministic terms implied by ``trend``."""
    y = np.asarray(y, dtype=float)
    n = y.size
    k = _TREND_K.get(trend)
    if k is None:
        raise ValueError(f"trend must be one of {sorted(_TREND_K)}, got {trend!r}")
    if n < k + 1:
        raise DegenerateRegressionError(f"need at least {k + 1} observations for trend={trend!r}")
    X = trend_matrix(n, trend)
    if k:
        beta, _ = _lstsq_qr(X, y)
        resid = y - X @ beta
    else:
        beta, resid = np.empty(0), y.copy()
    rss = float(resid @ resid)
    return OlsFit(beta, resid, rss / (n - k), rss, k)


def mackinnon_pvalue(stat: float, trend: str = "c") -> float:
    """Approximate asymptotic p-value of a Dickey-Fuller t statistic."""
    tau_star, tau_min, tau_max = MACKINNON_BOUNDS[trend]
    if stat > tau_max:
        return 1.0
    if stat < tau_min:
        return 0.0
    coef = MACKINNON_SMALLP[trend] if stat <= tau_star else MACKINNON_LARGEP[trend]
    return float(norm.cdf(np.polyval(coef[::-1], stat)))


def _adf_design(y: np.ndarray, lags: int, trend: str, start: int):
    """Rows t = start..n-1 of the ADF regression (dy_t on y_{t-1}, lagged dy)."""
    dy = np.diff(y)
    # dy[t-1] = y[t] - y[t-1]
    rows = np.arange(start, y.size)
    target = dy[rows - 1]
    cols = [y[rows - 1]]
    for j in range(1, lags + 1):
        cols.append(dy[rows - 1 - j])
    det = trend_matrix(rows.size, trend)
    X = np.column_stack(cols + [det])
    return X, target


def _ols_tstat(X: np.ndarray, y: np.ndarray, col: int = 0):
    beta, r = _lstsq_qr(X, y)
    resid = y - X @ beta
    nobs, k = X.shape
    rss = float(resid @ resid)
    if nobs <= k:
        raise DegenerateRegressionError("no residual degrees of freedom")
    sigma2 = rss / (nobs - k)
    scale = max(float(y @ y), 1e-300)
    if rss <= 1e-20 * scale:
        raise DegenerateRegressionError("regression fits exactly; residual variance is zero")
    rinv = np.linalg.inv(r)
    cov_diag = (rinv @ rinv.T)[col, col]
    return beta[col] / math.sqrt(sigma2 * cov_diag), rss, nobs, k


def adf_test(y: Sequence[float], trend: str = "c", max_lags: int | None = None) -> UnitRootResult:
    """Augmented Dickey-Fuller test with AIC lag selection.

    The lag order is chosen on a common estimation sample over 0..max_lags,
    then the chosen model is re-estimated on all usable observations.
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    if trend not in ("n", "c", "ct"):
        raise ValueError(f"trend must be 'n', 'c' or 'ct', got {trend!r}")
    if n < 10:
        raise DegenerateRegressionError("ADF test needs at least 10 observations")
    k_det = _TREND_K[trend]
    if max_lags is None:
        max_lags = int(math.floor(12.0 * (n / 100.0) ** 0.25))
    max_lags = max(0, min(int(max_lags), n // 2 - k_det - 2))

    best_lag, best_aic = 0, math.inf
    start = max_lags + 1
    for lags in range(max_lags + 1):
        X, target = _adf_design(y, lags, trend, start)
        try:
            beta, _ = _lstsq_qr(X, target)
        except DegenerateRegressionError:
            continue
        resid = target - X @ beta
        rss = float(resid @ resid)
        nobs = target.size
        if rss <= 0:
            continue
        aic = nobs * math.log(rss / nobs) + 2 * X.shape[1]
        if aic < best_aic - 1e-12:
            best_lag, best_aic = lags, aic

    X, target = _adf_design(y, best_lag, trend, best_lag + 1)
    stat, _, nobs, _ = _ols_tstat(X, target, 0)
    return UnitRootResult(float(stat), mackinnon_pvalue(stat, trend), best_lag, nobs, trend)


def acf(y: Sequence[float], lag: int) -> float:
    """Sample autocorrelation at ``lag``; 0 for a constant series."""
    y = np.asarray(y, dtype=float)
    if lag < 1 or lag >= y.size:
        raise ValueError(f"lag must be in 1..{y.size - 1}")
    d = y - y.mean()
    denom = float(d @ d)
    if denom <= 1e-24 * max(1.0, float(np.abs(y).max()) ** 2) * y.size:
        return 0.0
    return float(d[:-lag] @ d[lag:] / denom)
