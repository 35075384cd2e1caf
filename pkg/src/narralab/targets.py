"""Outcome construction per (firm, call, horizon): expected change, disagreement,
realized change, SUE — with the event windowing, share-basis adjustment,
earnings-yield scaling and tail trimming applied to each.
All change variables are expressed in basis points of earnings yield
(EPS / price at the call date).
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

BPS = 10_000.0
POST_CALL_WINDOW_DAYS = 15  # inclusive on both ends
SUE_LOOKBACK_DAYS = 90  # [call - 90, call)


@dataclass(frozen=True)
class ForecastRecord:
    analyst_id: str
    broker_id: str
    firm_id: str
    issue_date: dt.date
    horizon_years: int
    eps_forecast: float
    adjustment_factor: float

    def __post_init__(self):
        if self.horizon_years not in (1, 2, 3):
            raise ValueError("horizon_years must be 1, 2 or 3")
        if self.adjustment_factor <= 0:
            raise ValueError("adjustment_factor must be positive")


@dataclass(frozen=True)
class EarningsEvent:
    firm_id: str
    call_date: dt.date
    realized_eps_prev: float
    price_at_call: float
    realized_eps_future: Dict[int, float]
    adjustment_factor_at_realization: float = 1.0

    def __post_init__(self):
        if self.price_at_call <= 0:
            raise ValueError("price_at_call must be positive")


@dataclass(frozen=True)
class TargetRow:
    firm_id: str
    call_date: dt.date
    horizon_years: int
    expected_change_bps: float
    disagreement_bps: Optional[float]  # None when fewer than two forecasts
    realized_change_bps: float
    sue: Optional[float]  # None when no pre-call estimate in the 90-day window
    n_forecasts: int


def adjust_forecast(f: ForecastRecord, factor_at_realization: float) -> float:
    """Restate an EPS forecast to the realization-date share basis."""
    if factor_at_realization <= 0:
        raise ValueError("factor_at_realization must be positive")
    return f.eps_forecast * (f.adjustment_factor / factor_at_realization)


def window_filter(
    forecasts: Sequence[ForecastRecord], call_date: dt.date, horizon: int
) -> List[ForecastRecord]:
    """Post-call event window: call_date <= issue <= call_date + 15 days,
    matching horizon, keeping only each analyst's latest record (ties keep
    the last in input order)."""
    upper = call_date + dt.timedelta(days=POST_CALL_WINDOW_DAYS)
    latest: Dict[str, ForecastRecord] = {}
    for f in forecasts:
        if f.horizon_years != horizon:
            continue
        if not (call_date <= f.issue_date <= upper):
            continue
        prev = latest.get(f.analyst_id)
        if prev is None or f.issue_date >= prev.issue_date:
            latest[f.analyst_id] = f
    return list(latest.values())


def consensus_median(values: Sequence[float]) -> float:
    if not values:
        raise ValueError("no forecasts in window")
    ordered = sorted(values)
    n = len(ordered)
    mid = n // 2
    if n % 2 == 1:
        return float(ordered[mid])
    return (ordered[mid - 1] + ordered[mid]) / 2.0


def expected_change(consensus_yield: float, y_t_yield: float) -> float:
    return (consensus_yield - y_t_yield) * BPS


def realized_change(y_future_yield: float, y_t_yield: float) -> float:
    return (y_future_yield - y_t_yield) * BPS


def disagreement(adjusted_eps: Sequence[float], price_at_call: float) -> Optional[float]:
    """Sample (n-1) standard deviation of adjusted EPS over price, in bps.
    Equals the dispersion of per-analyst expected changes, since the
    just-released earnings level is common to every analyst.  With fewer
    than two forecasts the quantity is undefined and None is returned.
    """
    if price_at_call <= 0:
        raise ValueError("price_at_call must be positive")
    n = len(adjusted_eps)
    if n < 2:
        return None
    arr = np.asarray(adjusted_eps, dtype=np.float64)
    sd = float(arr.std(ddof=1))
    return sd / price_at_call * BPS


def compute_sue(
    actual_eps: float,
    estimates: Sequence[ForecastRecord],
    call_date: dt.date,
    price_at_call: float,
    factor_at_realization: float = 1.0,
) -> Optional[float]:
    """(actual - pre-call median estimate) / price.
    Only estimates issued in [call - 90 days, call) enter, keeping the latest
    per analyst to avoid stale information.  None when the window is empty.
    """
    if price_at_call <= 0:
        raise ValueError("price_at_call must be positive")
    lower = call_date - dt.timedelta(days=SUE_LOOKBACK_DAYS)
    latest: Dict[str, ForecastRecord] = {}
    for f in estimates:
        if not (lower <= f.issue_date < call_date):
            continue
        prev = latest.get(f.analyst_id)
        if prev is None or f.issue_date >= prev.issue_date:
            latest[f.analyst_id] = f
    if not latest:
        return None
    adjusted = [adjust_forecast(f, factor_at_realization) for f in latest.values()]
    return (actual_eps - consensus_median(adjusted)) / price_at_call


def trim(
    values: Sequence[float],
    lower_q: float = 0.05,
    upper_q: float = 0.95,
    bounds: Optional[Tuple[float, float]] = None,
) -> List[float]:
    """Drop observations strictly below the lower or strictly above the upper
    quantile (linear-interpolation quantiles).
    The hull is computed once over the full sample; passing ``bounds``
    re-applies an already-computed hull, under which the trim is idempotent —
    every survivor lies inside the hull, so a second pass changes nothing.
    """
    if len(values) == 0:
        raise ValueError("empty input")
    if bounds is None:
        arr = np.asarray(values, dtype=np.float64)
        lo = float(np.quantile(arr, lower_q))
        hi = float(np.quantile(arr, upper_q))
    else:
        lo, hi = bounds
    return [float(v) for v in values if lo <= v <= hi]


def build_target_rows(
    events: Sequence[EarningsEvent],
    forecasts: Sequence[ForecastRecord],
    horizons: Sequence[int] = (1, 2, 3),
) -> List[TargetRow]:
    """One row per (event, horizon) with at least one in-window forecast and a
    realized future value.  Trimming is a separate corpus-level pass."""
    by_firm: Dict[str, List[ForecastRecord]] = {}
    for f in forecasts:
        by_firm.setdefault(f.firm_id, []).append(f)
    rows: List[TargetRow] = []
    for ev in events:
        firm_fcs = by_firm.get(ev.firm_id, [])
        y_t_yield = ev.realized_eps_prev / ev.price_at_call
        for h in horizons:
            if h not in ev.realized_eps_future:
                continue
            in_window = window_filter(firm_fcs, ev.call_date, h)
            if not in_window:
                continue
            adjusted = [adjust_forecast(f, ev.adjustment_factor_at_realization) for f in in_window]
            consensus_yield = consensus_median(adjusted) / ev.price_at_call
            y_future_yield = ev.realized_eps_future[h] / ev.price_at_call
            rows.append(
                TargetRow(
                    firm_id=ev.firm_id,
                    call_date=ev.call_date,
                    horizon_years=h,
                    expected_change_bps=expected_change(consensus_yield, y_t_yield),
                    disagreement_bps=disagreement(adjusted, ev.price_at_call),
                    realized_change_bps=realized_change(y_future_yield, y_t_yield),
                    sue=compute_sue(
                        ev.realized_eps_prev,
                        firm_fcs,
                        ev.call_date,
                        ev.price_at_call,
                        ev.adjustment_factor_at_realization,
                    ),
                    n_forecasts=len(in_window),
                )
            )
    return rows


def trim_rows(rows: Sequence[TargetRow], lower_q: float = 0.05, upper_q: float = 0.95) -> List[TargetRow]:
    """Corpus-level tail trim, applied independently per (target, horizon).
    A row survives only if every one of its defined target values lies inside
    the per-horizon quantile hull of that target.
    """
    keep = set(range(len(rows)))
    for h in sorted({r.horizon_years for r in rows}):
        idx_h = [i for i in keep if rows[i].horizon_years == h]
        for getter in (
            lambda r: r.expected_change_bps,
            lambda r: r.realized_change_bps,
            lambda r: r.disagreement_bps,
        ):
            vals = [(i, getter(rows[i])) for i in idx_h if getter(rows[i]) is not None]
            if len(vals) < 2:
                continue
            arr = np.asarray([v for _, v in vals], dtype=np.float64)
            lo = float(np.quantile(arr, lower_q))
            hi = float(np.quantile(arr, upper_q))
            for i, v in vals:
                if not (lo <= v <= hi):
                    keep.discard(i)
    return [rows[i] for i in sorted(keep)]


# ---------------------------------------------------------------------------
# JSON-lines wire format


def _parse_date(s: str) -> dt.date:
    return dt.date.fromisoformat(s)


def forecast_from_record(rec: dict) -> ForecastRecord:
    return ForecastRecord(
        analyst_id=str(rec["analyst_id"]),
        broker_id=str(rec["broker_id"]),
        firm_id=str(rec["firm_id"]),
        issue_date=_parse_date(rec["issue_date"]),
        horizon_years=int(rec["horizon_years"]),
        eps_forecast=float(rec["eps_forecast"]),
        adjustment_factor=float(rec["adjustment_factor"]),
    )


def event_from_record(rec: dict) -> EarningsEvent:
    return EarningsEvent(
        firm_id=str(rec["firm_id"]),
        call_date=_parse_date(rec["call_date"]),
        realized_eps_prev=float(rec["realized_eps_prev"]),
        price_at_call=float(rec["price_at_call"]),
        realized_eps_future={int(k): float(v) for k, v in rec["realized_eps_future"].items()},
        adjustment_factor_at_realization=float(rec.get("adjustment_factor_at_realization", 1.0)),
    )


def target_row_to_record(row: TargetRow) -> dict:
    return {
        "firm_id": row.firm_id,
        "call_date": row.call_date.isoformat(),
        "horizon_years": row.horizon_years,
        "expected_change_bps": row.expected_change_bps,
        "disagreement_bps": row.disagreement_bps,
        "realized_change_bps": row.realized_change_bps,
        "sue": row.sue,
        "n_forecasts": row.n_forecasts,
    }


def target_row_from_record(rec: dict) -> TargetRow:
    return TargetRow(
        firm_id=str(rec["firm_id"]),
        call_date=_parse_date(rec["call_date"]),
        horizon_years=int(rec["horizon_years"]),
        expected_change_bps=float(rec["expected_change_bps"]),
        disagreement_bps=None if rec["disagreement_bps"] is None else float(rec["disagreement_bps"]),
        realized_change_bps=float(rec["realized_change_bps"]),
        sue=None if rec["sue"] is None else float(rec["sue"]),
        n_forecasts=int(rec["n_forecasts"]),
    )


def summary_statistics(rows: Sequence[TargetRow]) -> Dict[str, Dict[int, Dict[str, float]]]:
    """Per-target, per-horizon count/mean/std/min/p25/p50/p75/max panel."""
    getters = {
        "expected_change_bps": lambda r: r.expected_change_bps,
        "disagreement_bps": lambda r: r.disagreement_bps,
        "realized_change_bps": lambda r: r.realized_change_bps,
    }
    out: Dict[str, Dict[int, Dict[str, float]]] = {}
    for name, getter in getters.items():
        out[name] = {}
        for h in sorted({r.horizon_years for r in rows}):
            vals = [getter(r) for r in rows if r.horizon_years == h and getter(r) is not None]
            if not vals:
                continue
            arr = np.asarray(vals, dtype=np.float64)
            out[name][h] = {
                "count": len(vals),
                "mean": float(arr.mean()),
                "std": float(arr.std(ddof=1)) if len(vals) > 1 else 0.0,
                "min": float(arr.min()),
                "p25": float(np.quantile(arr, 0.25)),
                "p50": float(np.quantile(arr, 0.50)),
                "p75": float(np.quantile(arr, 0.75)),
                "max": float(arr.max()),
            }
    return out
