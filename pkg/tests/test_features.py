import datetime as dt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from narralab.embed import EmbeddingVector, hashing_embedder
from narralab.features import (
    FeatureGroup,
    FeatureSpec,
    FundamentalsRow,
    assemble,
    one_year_change,
    rank_standardize,
    replace_embedding,
)

from conftest import make_event, make_forecast
from narralab.targets import build_target_rows


class TestRankStandardize:
    def test_three_values_one_date(self):
        out = rank_standardize([10.0, 30.0, 20.0], ["d"] * 3)
        assert out == [-0.5, 0.5, 0.0]

    def test_singleton_group_is_zero(self):
        assert rank_standardize([42.0], ["d"]) == [0.0]

    def test_average_ties(self):
        out = rank_standardize([1.0, 1.0, 2.0], ["d"] * 3)
        # tied ranks (1,2) average to 1.5 -> (1.5-1)/2 - 0.5 = -0.25
        assert out == [-0.25, -0.25, 0.5]

    def test_missing_preserved(self):
        out = rank_standardize([1.0, None, 3.0], ["d"] * 3)
        assert out[1] is None
        assert out[0] == -0.5 and out[2] == 0.5

    def test_groups_independent(self):
        out = rank_standardize([1.0, 9.0, 2.0, 8.0], ["a", "b", "a", "b"])
        assert out == [-0.5, 0.5, 0.5, -0.5]

    @given(st.lists(st.floats(-100, 100), min_size=2, max_size=30, unique=True))
    @settings(max_examples=100)
    def test_range_and_monotonicity(self, vals):
        out = rank_standardize(vals, ["d"] * len(vals))
        assert all(-0.5 <= v <= 0.5 for v in out)
        order_in = np.argsort(vals)
        order_out = np.argsort(out)
        assert list(order_in) == list(order_out)


def test_one_year_change():
    cur = FundamentalsRow("F1", dt.date(2022, 1, 1), {"a": 3.0, "b": None})
    prev = FundamentalsRow("F1", dt.date(2021, 1, 1), {"a": 1.0})
    out = one_year_change(cur, prev)
    assert out == {"a": 2.0, "b": None}
    assert one_year_change(cur, None) == {"a": None, "b": None}


class TestAssemble:
    def _inputs(self, dim=8, n=3):
        events = [make_event("F1", f"2022-0{i+1}-01", realized={1: 2.1}) for i in range(n)]
        forecasts = [
            make_forecast(a, 2.0 + 0.1 * i, f"2022-0{i+1}-05", firm_id="F1")
            for i in range(n) for a in ("A1", "A2")
        ]
        rows = build_target_rows(events, forecasts, horizons=(1,))
        provider = hashing_embedder(seed=0, dim=dim)
        fundamentals = {
            ("F1", r.call_date.isoformat()): {"size": 0.1, "roe": None} for r in rows
        }
        embeddings = {
            f"F1|{r.call_date.isoformat()}": EmbeddingVector(
                doc_id=f"F1|{r.call_date.isoformat()}", dim=dim,
                values=provider.embed_chunk(f"doc {r.call_date}".replace("-", " ")))
            for r in rows
        }
        return fundamentals, embeddings, rows

    def test_width_identity_st_minus_s(self):
        fund, emb, rows = self._inputs(dim=8)
        s = assemble(FeatureSpec.S, fund, emb, rows)
        st_ = assemble(FeatureSpec.ST, fund, emb, rows)
        t = assemble(FeatureSpec.T, fund, emb, rows)
        assert st_.width - s.width == 8
        assert t.width == 8
        assert st_.width == s.width + t.width

    def test_feature_names_and_groups(self):
        fund, emb, rows = self._inputs(dim=4)
        st_ = assemble(FeatureSpec.ST, fund, emb, rows)
        assert st_.feature_names[:3] == ["roe", "size", "sue"]
        assert st_.feature_names[3:] == ["emb_000", "emb_001", "emb_002", "emb_003"]
        assert st_.group_of["sue"] is FeatureGroup.FUNDAMENTALS
        assert st_.group_of["emb_000"] is FeatureGroup.TEXT

    def test_sue_comes_from_target_row(self):
        fund, emb, rows = self._inputs(dim=4)
        st_ = assemble(FeatureSpec.ST, fund, emb, rows)
        for r, row in enumerate(rows):
            expected = np.nan if row.sue is None else row.sue
            got = st_.column("sue")[r]
            assert (np.isnan(got) and np.isnan(expected)) or got == expected

    def test_missing_fundamentals_is_nan(self):
        fund, emb, rows = self._inputs(dim=4)
        s = assemble(FeatureSpec.S, fund, emb, rows)
        assert np.isnan(s.column("roe")).all()

    def test_embeddings_not_rank_standardized(self):
        fund, emb, rows = self._inputs(dim=4)
        st_ = assemble(FeatureSpec.ST, fund, emb, rows)
        for r, row in enumerate(rows):
            key = f"F1|{row.call_date.isoformat()}"
            np.testing.assert_array_equal(st_.values[r, 3:], emb[key].values)

    def test_unmatched_rows_raise(self):
        fund, emb, rows = self._inputs(dim=4)
        with pytest.raises(KeyError, match="no fundamentals"):
            assemble(FeatureSpec.S, {}, emb, rows)
        wrong_ids = {f"X{k}": EmbeddingVector(f"X{k}", v.dim, v.values) for k, v in emb.items()}
        with pytest.raises(KeyError, match="no embedding"):
            assemble(FeatureSpec.T, fund, wrong_ids, rows)

    def test_inconsistent_dims_raise(self):
        fund, emb, rows = self._inputs(dim=4)
        bad = dict(emb)
        k = next(iter(bad))
        bad[k] = EmbeddingVector(doc_id=k, dim=6, values=np.zeros(6))
        with pytest.raises(ValueError, match="inconsistent"):
            assemble(FeatureSpec.T, fund, bad, rows)


def test_replace_embedding_touches_only_text_columns():
    provider = hashing_embedder(seed=0, dim=4)
    events = [make_event("F1", "2022-01-01", realized={1: 2.1})]
    forecasts = [make_forecast("A1", 2.0, "2022-01-05"), make_forecast("A2", 2.2, "2022-01-06")]
    rows = build_target_rows(events, forecasts, horizons=(1,))
    fund = {("F1", "2022-01-01"): {"size": 0.2}}
    emb = {"F1|2022-01-01": EmbeddingVector("F1|2022-01-01", 4, provider.embed_chunk("alpha"))}
    st_ = assemble(FeatureSpec.ST, fund, emb, rows)
    new = EmbeddingVector("x", 4, provider.embed_chunk("beta"))
    row = replace_embedding(st_, 0, new)
    np.testing.assert_array_equal(row[2:], new.values)
    np.testing.assert_array_equal(row[:2], st_.values[0, :2])
    # the matrix itself is untouched
    np.testing.assert_array_equal(st_.values[0, 2:], emb["F1|2022-01-01"].values)
    with pytest.raises(ValueError, match="dim mismatch"):
        replace_embedding(st_, 0, EmbeddingVector("y", 3, np.zeros(3)))
