import datetime as dt
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from narralab.targets import (
    adjust_forecast,
    build_target_rows,
    compute_sue,
    consensus_median,
    disagreement,
    expected_change,
    realized_change,
    summary_statistics,
    target_row_from_record,
    target_row_to_record,
    trim,
    trim_rows,
    window_filter,
)

from conftest import make_event, make_forecast

CALL = dt.date(2022, 1, 1)


class TestWindowFilter:
    def test_inclusive_15_day_boundary(self):
        inside = make_forecast("A1", 2.0, "2022-01-16")   # call + 15: kept
        outside = make_forecast("A2", 3.0, "2022-01-17")  # call + 16: dropped
        on_call = make_forecast("A3", 4.0, "2022-01-01")
        kept = window_filter([inside, outside, on_call], CALL, 1)
        assert {f.analyst_id for f in kept} == {"A1", "A3"}

    def test_before_call_dropped(self):
        kept = window_filter([make_forecast("A1", 2.0, "2021-12-31")], CALL, 1)
        assert kept == []

    def test_latest_per_analyst(self):
        early = make_forecast("A1", 2.0, "2022-01-03")
        late = make_forecast("A1", 5.0, "2022-01-10")
        kept = window_filter([early, late], CALL, 1)
        assert [f.eps_forecast for f in kept] == [5.0]

    def test_same_day_keeps_last_in_input_order(self):
        first = make_forecast("A1", 2.0, "2022-01-03")
        second = make_forecast("A1", 9.0, "2022-01-03")
        kept = window_filter([first, second], CALL, 1)
        assert [f.eps_forecast for f in kept] == [9.0]

    def test_horizon_mismatch_dropped(self):
        kept = window_filter([make_forecast("A1", 2.0, "2022-01-03", horizon=2)], CALL, 1)
        assert kept == []

    @given(st.permutations(range(5)))
    def test_dedup_permutation_invariant_across_dates(self, order):
        fs = [make_forecast(f"A{i % 2}", float(i), f"2022-01-{3 + i:02d}") for i in range(5)]
        shuffled = [fs[i] for i in order]
        kept = sorted(
            (f.analyst_id, f.eps_forecast) for f in window_filter(shuffled, CALL, 1)
        )
        assert kept == [("A0", 4.0), ("A1", 3.0)]


class TestConsensusAndChanges:
    def test_median_permutation_invariant(self):
        vals = [3.0, 1.0, 2.0]
        assert consensus_median(vals) == consensus_median(sorted(vals)) == 2.0

    def test_median_even_count(self):
        assert consensus_median([1.0, 2.0, 3.0, 4.0]) == 2.5

    def test_expected_change_bps(self):
        # consensus yield 3%, trailing yield 2% -> +100 bps
        assert expected_change(0.03, 0.02) == pytest.approx(100.0)

    def test_realized_change_bps(self):
        assert realized_change(0.015, 0.02) == pytest.approx(-50.0)

    def test_adjust_forecast_splits(self):
        # a forecast made pre-split doubles on the post-split share basis
        f = make_forecast(eps=2.0, factor=2.0)
        assert adjust_forecast(f, 1.0) == pytest.approx(4.0)
        assert adjust_forecast(make_forecast(eps=2.0, factor=1.0), 1.0) == 2.0
        assert adjust_forecast(make_forecast(eps=0.0, factor=3.0), 2.0) == 0.0
        with pytest.raises(ValueError):
            adjust_forecast(f, 0.0)


class TestDisagreement:
    def test_identical_forecasts_zero(self):
        assert disagreement([2.0, 2.0, 2.0], 50.0) == 0.0

    def test_hand_fixture_sqrt_two(self):
        # sample std of {1, 3} with divisor n-1 is sqrt(2); over price 100 -> bps
        val = disagreement([1.0, 3.0], 100.0)
        assert val == pytest.approx(math.sqrt(2.0) * 100.0, abs=1e-9)
        assert val == pytest.approx(141.4213562373095, abs=1e-9)

    def test_single_forecast_missing(self):
        assert disagreement([2.0], 100.0) is None


class TestSUE:
    def test_90_day_window(self):
        est_in = make_forecast("A1", 2.0, "2021-10-04")    # call - 89: in
        est_out = make_forecast("A2", 9.0, "2021-10-02")   # call - 91: out
        est_call_day = make_forecast("A3", 9.0, "2022-01-01")  # call day excluded
        sue = compute_sue(3.0, [est_in, est_out, est_call_day], CALL, 100.0)
        assert sue == pytest.approx((3.0 - 2.0) / 100.0)

    def test_boundary_exactly_90_days(self):
        est = make_forecast("A1", 2.5, "2021-10-03")  # call - 90: inclusive
        assert compute_sue(3.0, [est], CALL, 100.0) == pytest.approx(0.005)

    def test_empty_window_missing(self):
        assert compute_sue(3.0, [], CALL, 100.0) is None

    def test_latest_per_analyst_used(self):
        old = make_forecast("A1", 1.0, "2021-11-01")
        new = make_forecast("A1", 2.0, "2021-12-15")
        assert compute_sue(2.0, [old, new], CALL, 100.0) == pytest.approx(0.0)


class TestTrim:
    def test_keeps_inner_values(self):
        vals = list(map(float, range(1, 101)))
        kept = trim(vals)
        # 5% / 95% linear-interpolation quantiles of 1..100
        lo = np.quantile(vals, 0.05)
        hi = np.quantile(vals, 0.95)
        assert kept == [v for v in vals if lo <= v <= hi]

    def test_idempotent_under_sample_hull(self):
        # the 5/95 hull is computed once over the full sample; re-applying
        # the trim with that hull leaves the trimmed data untouched
        rng = np.random.default_rng(0)
        vals = rng.normal(size=200).tolist()
        hull = (float(np.quantile(vals, 0.05)), float(np.quantile(vals, 0.95)))
        once = trim(vals)
        assert trim(once, bounds=hull) == once
        assert trim(trim(once, bounds=hull), bounds=hull) == once

    def test_output_submultiset_of_input(self):
        rng = np.random.default_rng(1)
        vals = rng.normal(size=150).tolist()
        out = trim(vals)
        remaining = list(vals)
        for v in out:
            remaining.remove(v)  # raises if not a sub-multiset

    @given(st.lists(st.floats(-1e6, 1e6), min_size=25, max_size=120))
    @settings(max_examples=100)
    def test_permutation_invariant(self, vals):
        shuffled = list(reversed(vals))
        assert sorted(trim(vals)) == sorted(trim(shuffled))


class TestTargetRows:
    def _rows(self):
        events = [
            make_event("F1", "2022-01-01", price=100.0, eps_prev=2.5, realized={1: 2.4}),
            make_event("F2", "2022-02-01", price=50.0, eps_prev=1.1, realized={1: 1.2}),
        ]
        forecasts = [
            make_forecast("A1", 2.2, "2022-01-05", firm_id="F1"),
            make_forecast("A2", 2.6, "2022-01-06", firm_id="F1"),
            make_forecast("A1", 2.0, "2021-11-01", firm_id="F1"),  # pre-call: SUE only
            make_forecast("A1", 1.3, "2022-02-05", firm_id="F2"),
        ]
        return build_target_rows(events, forecasts, horizons=(1,))

    def test_expected_change_from_median(self):
        row = next(r for r in self._rows() if r.firm_id == "F1")
        consensus = (2.2 + 2.6) / 2.0
        assert row.expected_change_bps == pytest.approx((consensus / 100.0 - 0.025) * 10000)

    def test_realized_change(self):
        row = next(r for r in self._rows() if r.firm_id == "F1")
        assert row.realized_change_bps == pytest.approx((2.4 / 100.0 - 0.025) * 10000)

    def test_disagreement_none_for_single_analyst(self):
        row = next(r for r in self._rows() if r.firm_id == "F2")
        assert row.disagreement_bps is None

    def test_sue_uses_pre_call_estimates(self):
        row = next(r for r in self._rows() if r.firm_id == "F1")
        assert row.sue == pytest.approx((2.5 - 2.0) / 100.0)

    def test_roundtrip_record(self):
        for row in self._rows():
            assert target_row_from_record(target_row_to_record(row)) == row

    def test_summary_statistics_shape(self):
        stats = summary_statistics(self._rows())
        assert "expected_change_bps" in stats
        entry = stats["expected_change_bps"][1]
        assert {"count", "mean", "std", "min", "p25", "p50", "p75", "max"} <= set(entry)


def test_trim_rows_drops_tail_rows():
    # one event per firm so forecast windows do not overlap
    events = [make_event(f"F{d}", f"2022-01-{d:02d}", price=100.0, eps_prev=2.0,
                         realized={1: 2.0}) for d in range(1, 26)]
    forecasts = []
    for d in range(1, 26):
        eps = 100.0 if d == 25 else 2.0 + 0.01 * d
        forecasts.append(make_forecast("A1", eps, f"2022-01-{d:02d}", firm_id=f"F{d}"))
    rows = build_target_rows(events, forecasts, horizons=(1,))
    trimmed = trim_rows(rows)
    assert len(trimmed) < len(rows)
    assert all(r.firm_id != "F25" for r in trimmed)
