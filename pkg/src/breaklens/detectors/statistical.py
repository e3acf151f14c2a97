"""Regression and test based detectors: OLS-residual CUSUM, Bai-Perron
sequential mean-shift breaks, the Chow split test and Zivot-Andrews."""

from __future__ import annotations

import math

import numpy as np
from scipy.stats import f as f_dist

from breaklens._tables import BAI_PERRON_SUPF, CUSUM_CRITICAL, ZA_QUANTILES
from breaklens.detectors.base import (
    DetectorConfig,
    DetectorError,
    Detection,
    clamp,
    require_length,
)
from breaklens.kernels import segment_neighbourhood
from breaklens.timeseries import (
    DegenerateRegressionError,
    TimeSeries,
    _ols_tstat,
    adf_test,
    ols_fit,
)

__all__ = [
    "cusum_detect",
    "cusum_statistic",
    "bai_perron_detect",
    "chow_detect",
    "chow_statistics",
    "zivot_andrews_detect",
    "za_statistics",
    "za_pvalue",
]


def _trim(n: int, frac: float) -> int:
    return max(1, int(math.ceil(frac * n)))


# --------------------------------------------------------------------------
# CUSUM
# --------------------------------------------------------------------------


def cusum_statistic(y, trend: str = "c") -> np.ndarray:
    """Standardized cumulative sum path ``S*_t`` of OLS residuals.

    Element ``t`` (0-based) sums the first ``t + 1`` centred residuals.
    Returns an all-zero path when the residual variance vanishes.
    """
    y = np.asarray(y, dtype=float)
    fit = ols_fit(y, trend)
    e = fit.residuals
    sigma = math.sqrt(max(fit.residual_variance, 0.0))
    scale = max(1.0, float(np.abs(y).max()))
    if sigma <= 1e-12 * scale:
        return np.zeros(y.size)
    s = np.cumsum(e - e.mean())
    return s / (sigma * math.sqrt(y.size))


def cusum_detect(ts: TimeSeries, cfg: DetectorConfig | None = None) -> list[Detection]:
    """Single break at the peak of the residual CUSUM path.

    The break is reported when ``max |S*_t|`` exceeds the boundary constant
    for the configured significance level.
    """
    cfg = cfg or DetectorConfig()
    require_length(ts.n, "cusum")
    path = cusum_statistic(ts.values, cfg.trend or "c")
    absp = np.abs(path)
    t = int(np.argmax(absp))  # first maximum on ties
    stat = float(absp[t])
    crit = CUSUM_CRITICAL[cfg.significance_level]
    if stat <= crit:
        return []
    index = t + 1
    if not 1 <= index <= ts.n - 1:
        return []
    conf = min(0.95, max(0.1, stat / crit))
    return [Detection(index, conf, "cusum", stat)]


# --------------------------------------------------------------------------
# Bai-Perron (mean-shift, sequential F)
# --------------------------------------------------------------------------


def _seg_ssr(y: np.ndarray, bounds) -> float:
    total = 0.0
    for a, b in zip(bounds[:-1], bounds[1:]):
        seg = y[a:b]
        total += float(((seg - seg.mean()) ** 2).sum())
    return total


def _f_pvalue(ssr_r: float, ssr_u: float, k: int, df: int, scale: float) -> tuple[float, float]:
    """F statistic and upper-tail p-value; 0/0 counts as no evidence."""
    num = max(ssr_r - ssr_u, 0.0) / k
    if df <= 0:
        return 0.0, 1.0
    tiny = 1e-12 * scale
    if ssr_u <= tiny:
        if num * k <= tiny:
            return 0.0, 1.0
        return math.inf, 0.0
    F = num / (ssr_u / df)
    return F, float(f_dist.sf(F, k, df))


def bai_perron_detect(ts: TimeSeries, cfg: DetectorConfig | None = None) -> list[Detection]:
    """Multiple mean shifts chosen by global SSR minimization.

    Breaks are added one at a time (``m = 1..max_breaks``) while the F
    statistic of the ``m``-break optimum against the ``(m-1)``-break optimum
    exceeds the sup F(m | m-1) critical value at the configured level. The
    break location is estimated, so the plain F(1, n-3) tail would reject far
    too often under the null. Each reported break carries ``1 - p`` of the
    plain F test for removing it from the final partition at its estimated
    location.
    """
    cfg = cfg or DetectorConfig()
    require_length(ts.n, "bai_perron")
    y = np.asarray(ts.values, dtype=float)
    n = y.size
    h = _trim(n, cfg.min_segment_size)
    if 2 * h > n:
        raise DetectorError(f"bai_perron: trimming {h} leaves no admissible split for n={n}")
    max_m = min(cfg.max_breaks, n // h - 1)
    costs, parts = segment_neighbourhood(y, "l2", max_m, h, 1)
    k = 1
    df = n - 2 * k - 1
    scale = max(float(((y - y.mean()) ** 2).sum()), 1e-300)
    chosen: list[int] = []
    for m in range(1, max_m + 1):
        if parts[m] is None:
            break
        F, _ = _f_pvalue(float(costs[m - 1]), float(costs[m]), k, df, scale)
        if not F > BAI_PERRON_SUPF[cfg.significance_level][m - 1]:
            break
        chosen = list(parts[m])
    out = []
    for b in chosen:
        bounds = [0, *chosen, n]
        without = [0, *[c for c in chosen if c != b], n]
        F, p = _f_pvalue(_seg_ssr(y, without), _seg_ssr(y, bounds), k, df, scale)
        out.append(Detection(int(b), clamp(1.0 - p, 0.0, 1.0), "bai_perron", F))
    return out


# --------------------------------------------------------------------------
# Chow
# --------------------------------------------------------------------------


def _prefix_rss(y: np.ndarray):
    """Closure giving RSS of ``y[a:b]`` on (const, t) via prefix moments."""
    t = np.arange(y.size, dtype=float)
    cs = lambda v: np.concatenate([[0.0], np.cumsum(v)])  # noqa: E731
    S1, St, Stt, Sy, Sty, Syy = cs(np.ones_like(y)), cs(t), cs(t * t), cs(y), cs(t * y), cs(y * y)

    def rss(a: int, b: int, trend: str) -> float:
        m = S1[b] - S1[a]
        sy, syy = Sy[b] - Sy[a], Syy[b] - Syy[a]
        if trend == "c":
            return max(syy - sy * sy / m, 0.0)
        st, stt, sty = St[b] - St[a], Stt[b] - Stt[a], Sty[b] - Sty[a]
        # centre t within the segment for numerical stability
        tbar, ybar = st / m, sy / m
        sxx = stt - m * tbar * tbar
        sxy = sty - m * tbar * ybar
        syy_c = syy - m * ybar * ybar
        if sxx <= 0:
            raise DegenerateRegressionError("segment too short for a trend fit")
        return max(syy_c - sxy * sxy / sxx, 0.0)

    return rss


def chow_statistics(y, trend: str = "ct", trim: float = 0.15):
    """Chow F statistic and p-value for every admissible split.

    Returns ``(taus, F, p)``; splits with an undefined 0/0 statistic get
    ``nan`` in both arrays.
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    if trend not in ("c", "ct"):
        raise ValueError("chow trend must be 'c' or 'ct'")
    k = 1 if trend == "c" else 2
    h = max(_trim(n, trim), k + 1)
    taus = np.arange(h, n - h + 1)
    if taus.size == 0:
        raise DetectorError(f"chow_test: no admissible split for n={n}")
    rss = _prefix_rss(y)
    full = rss(0, n, trend)
    scale = max(float(((y - y.mean()) ** 2).sum()), float(np.abs(y).max()) ** 2, 1e-300)
    df = n - 2 * k
    F = np.full(taus.size, np.nan)
    p = np.full(taus.size, np.nan)
    for i, tau in enumerate(taus):
        r = rss(0, int(tau), trend) + rss(int(tau), n, trend)
        num = max(full - r, 0.0)
        tiny = 1e-12 * scale
        if r <= tiny:
            if num <= tiny:
                continue
            F[i], p[i] = math.inf, 0.0
            continue
        F[i] = (num / k) / (r / df)
        p[i] = f_dist.sf(F[i], k, df)
    return taus, F, p


def chow_detect(ts: TimeSeries, cfg: DetectorConfig | None = None) -> list[Detection]:
    """Chow split test over the trimmed grid with greedy multiple-break mode.

    Local maxima of the F profile with ``p < alpha`` are accepted in order
    of significance, skipping any closer than the trimming length to an
    already accepted break.
    """
    cfg = cfg or DetectorConfig()
    require_length(ts.n, "chow_test")
    trend = cfg.trend or "ct"
    n = ts.n
    taus, F, p = chow_statistics(ts.values, trend, cfg.min_segment_size)
    if np.all(np.isnan(F)):
        return []
    Fz = np.where(np.isnan(F), -np.inf, F)
    peaks = []
    for i in range(taus.size):
        if np.isnan(F[i]) or p[i] >= cfg.significance_level:
            continue
        left = Fz[i - 1] if i > 0 else -np.inf
        right = Fz[i + 1] if i + 1 < taus.size else -np.inf
        if Fz[i] >= left and Fz[i] >= right:
            peaks.append(i)
    peaks.sort(key=lambda i: (p[i], -Fz[i], taus[i]))
    sep = _trim(n, cfg.min_segment_size)
    accepted: list[int] = []
    for i in peaks:
        if len(accepted) >= cfg.max_breaks:
            break
        if all(abs(int(taus[i]) - int(taus[j])) >= sep for j in accepted):
            accepted.append(i)
    return sorted(
        (Detection(int(taus[i]), clamp(1.0 - float(p[i]), 0.05, 0.95), "chow_test", float(F[i])) for i in accepted),
        key=lambda d: d.index,
    )


# --------------------------------------------------------------------------
# Zivot-Andrews
# --------------------------------------------------------------------------


def za_pvalue(stat: float, trend: str = "c") -> float:
    """Interpolated p-value of a minimum-t statistic, clamped to [0.001, 0.999]."""
    table = ZA_QUANTILES[trend]
    p = float(np.interp(stat, table[:, 1], table[:, 0])) / 100.0
    return clamp(p, 0.001, 0.999)


def _za_design(y: np.ndarray, lags: int, tau: int, trend: str):
    n = y.size
    dy = np.diff(y)
    rows = np.arange(lags + 1, n)
    cols = [y[rows - 1]]
    for j in range(1, lags + 1):
        cols.append(dy[rows - 1 - j])
    t = rows.astype(float)
    cols += [np.ones(rows.size), t]
    if trend in ("c", "ct"):
        cols.append((rows >= tau).astype(float))
    if trend in ("t", "ct"):
        cols.append(np.where(rows >= tau, t - tau + 1.0, 0.0))
    return np.column_stack(cols), dy[rows - 1]


def za_statistics(y, trend: str = "c", lags: int | None = None, trim: float = 0.15, max_lags: int | None = None):
    """Unit-root t statistic for every admissible break date.

    The lag order is chosen once by AIC on the no-break trend regression.
    Returns ``(taus, tstats, lags)``; failed fits get ``nan``.
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    if trend not in ("c", "t", "ct"):
        raise ValueError("zivot_andrews trend must be 'c', 't' or 'ct'")
    if lags is None:
        try:
            lags = adf_test(y, "ct", max_lags).lags_used
        except DegenerateRegressionError:
            lags = 0
    h = _trim(n, trim)
    taus = np.arange(h, n - h + 1)
    stats = np.full(taus.size, np.nan)
    for i, tau in enumerate(taus):
        X, target = _za_design(y, lags, int(tau), trend)
        if target.size <= X.shape[1] + 1:
            raise DetectorError("zivot_andrews: too few observations after lag augmentation")
        try:
            stats[i] = _ols_tstat(X, target, 0)[0]
        except DegenerateRegressionError:
            continue
    return taus, stats, lags


def zivot_andrews_detect(ts: TimeSeries, cfg: DetectorConfig | None = None) -> list[Detection]:
    """Break date minimizing the unit-root t statistic, reported at 5%."""
    cfg = cfg or DetectorConfig()
    require_length(ts.n, "zivot_andrews")
    trend = cfg.trend or "c"
    taus, stats, _ = za_statistics(ts.values, trend, None, cfg.min_segment_size, cfg.max_lags)
    if np.all(np.isnan(stats)):
        return []
    i = int(np.nanargmin(stats))
    stat = float(stats[i])
    p = za_pvalue(stat, trend)
    if p >= 0.05:
        return []
    return [Detection(int(taus[i]), max(0.0, 1.0 - p), "zivot_andrews", stat)]
