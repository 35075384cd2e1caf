"""Nested out-of-sample forecast comparison (MSPE-adjusted, one-sided) with
Bartlett-kernel long-run variance, plus the analyst-benchmark gains report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Sequence

import numpy as np


@dataclass(frozen=True)
class CWResult:
    t_stat: float
    p_value_one_sided: float
    mean_adjusted_diff: float
    mse_restricted: float
    mse_unrestricted: float
    mse_reduction_pct: float
    hac_lags: int
    n: int


def newey_west_variance(series: Sequence[float], lags: int) -> float:
    """Bartlett long-run variance: gamma0 + 2 * sum_j (1 - j/(L+1)) * gamma_j.

    Autocovariances use the biased 1/n normalization of the demeaned series,
    which keeps the estimate positive semi-definite.  With L = 0 this is the
    plain 1/n variance.
    """
    x = np.asarray(series, dtype=np.float64)
    n = x.size
    if lags < 0:
        raise ValueError("lags must be non-negative")
    if lags >= n:
        raise ValueError("lags must be < series length")
    d = x - x.mean()
    gamma0 = float(np.dot(d, d)) / n
    acc = gamma0
    for j in range(1, lags + 1):
        gamma_j = float(np.dot(d[j:], d[:-j])) / n
        acc += 2.0 * (1.0 - j / (lags + 1.0)) * gamma_j
    return acc


def _phi(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def clark_west(
    y: Sequence[float],
    yhat_r: Sequence[float],
    yhat_u: Sequence[float],
    horizon_steps: int = 1,
) -> CWResult:
    """MSPE-adjusted comparison of a restricted vs. a nesting unrestricted model.

    Per-observation adjusted differential
        d_t = (y_t - yhat_r_t)^2 - (y_t - yhat_u_t)^2 + (yhat_r_t - yhat_u_t)^2
    with t = mean(d) / sqrt(LRV(d) / n) under Bartlett lags L = h - 1 and a
    one-sided upper-tail p-value from the standard normal.
    """
    y = np.asarray(y, dtype=np.float64)
    r = np.asarray(yhat_r, dtype=np.float64)
    u = np.asarray(yhat_u, dtype=np.float64)
    if not (y.shape == r.shape == u.shape):
        raise ValueError("series lengths differ")
    n = y.size
    if n < 8:
        raise ValueError("need at least 8 observations")
    if horizon_steps < 1:
        raise ValueError("horizon_steps must be positive")
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(r)) and np.all(np.isfinite(u))):
        raise ValueError("inputs must be finite")
    e_r = y - r
    e_u = y - u
    d = e_r**2 - e_u**2 + (r - u) ** 2
    lags = horizon_steps - 1
    variance = newey_west_variance(d, lags)
    if variance <= 0.0:
        raise ValueError("degenerate differential")
    d_bar = float(d.mean())
    t = d_bar / math.sqrt(variance / n)
    mse_r = float(np.mean(e_r**2))
    mse_u = float(np.mean(e_u**2))
    return CWResult(
        t_stat=t,
        p_value_one_sided=1.0 - _phi(t),
        mean_adjusted_diff=d_bar,
        mse_restricted=mse_r,
        mse_unrestricted=mse_u,
        mse_reduction_pct=100.0 * d_bar / mse_r,
        hac_lags=lags,
        n=n,
    )


def hac_lags_for_horizon(horizon_years: int) -> int:
    """Annual forecast horizons map to h-step event sequences: 1Y -> 0 lags,
    2Y -> 1, 3Y -> 2 (overlapping h-step errors are MA(h-1))."""
    if horizon_years < 1:
        raise ValueError("horizon_years must be positive")
    return horizon_years - 1


def analyst_benchmark_gains(
    y: Sequence[float],
    analyst_forecast_yield: Sequence[float],
    model_s_pred: Sequence[float],
    model_st_pred: Sequence[float],
) -> Dict[str, float]:
    """Percentage MSE improvement of the S and ST models over the analyst
    forecast baseline."""
    y = np.asarray(y, dtype=np.float64)
    a = np.asarray(analyst_forecast_yield, dtype=np.float64)
    s = np.asarray(model_s_pred, dtype=np.float64)
    st = np.asarray(model_st_pred, dtype=np.float64)
    if not (y.shape == a.shape == s.shape == st.shape):
        raise ValueError("series lengths differ")
    mse_analyst = float(np.mean((y - a) ** 2))
    if mse_analyst == 0.0:
        raise ValueError("zero baseline MSE")
    mse_s = float(np.mean((y - s) ** 2))
    mse_st = float(np.mean((y - st) ** 2))
    return {
        "mse_forecast": mse_analyst,
        "fundamentals_gain_pct": 100.0 * (1.0 - mse_s / mse_analyst),
        "total_gain_pct": 100.0 * (1.0 - mse_st / mse_analyst),
    }
