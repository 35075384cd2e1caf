import numpy as np
import pytest

from narralab import gbm
from narralab.corpus import MaskedDocument, TextChunk
from narralab.embed import EmbeddingVector
from narralab.features import FeatureSpec, assemble
from narralab.morph import GenerationParams, NarrativeDimension
from narralab.pte import (
    FactorScores,
    PTEResult,
    TargetKind,
    average_pte,
    compute_pte,
    factor_matrix,
    factor_model_fit,
    fundamental_news_benchmark,
    pte_result_from_record,
    pte_result_to_record,
    score_factors,
)
from narralab.targets import build_target_rows

from conftest import make_event, make_forecast


def lattice_setup(dim=2, n_levels=4):
    """Target rows whose embeddings sit on an integer lattice along emb_000,
    with y a known linear function of the embedding — the boosted model can
    represent it exactly, giving an analytic treatment-effect oracle."""
    w = np.array([30.0, -10.0])
    events, forecasts, emb = [], [], {}
    for i in range(n_levels * 3):
        date = f"2022-{1 + i % 12:02d}-{1 + i // 12:02d}"
        firm = f"F{i}"
        events.append(make_event(firm, date, realized={1: 2.1}))
        forecasts.append(make_forecast("A1", 2.0, date, firm_id=firm))
        forecasts.append(make_forecast("A2", 2.2, date, firm_id=firm))
        vec = np.array([float(i % n_levels), float((i // n_levels) % 2)])
        emb[f"{firm}|{date}"] = EmbeddingVector(f"{firm}|{date}", dim, vec)
    rows = build_target_rows(events, forecasts, horizons=(1,))
    fund = {(r.firm_id, r.call_date.isoformat()): {"size": 0.0} for r in rows}
    matrix = assemble(FeatureSpec.ST, fund, emb, rows)
    y = np.array([w @ emb[f"{r.firm_id}|{r.call_date.isoformat()}"].values for r in rows])
    hp = gbm.Hyperparams(n_trees=60, max_depth=3, min_samples_leaf=1, learning_rate=1.0)
    model = gbm.fit(matrix.values, y, hp, matrix.feature_names)
    return model, matrix, emb, w


class TestComputePTE:
    def test_identity_morph_is_exactly_zero(self):
        model, matrix, emb, _ = lattice_setup()
        for idx, key in enumerate(matrix.row_keys):
            e = emb[f"{key[0]}|{key[1]}"]
            assert compute_pte(model, matrix, idx, e, e) == 0.0

    def test_linear_oracle_recovered(self):
        model, matrix, emb, w = lattice_setup()
        orig = EmbeddingVector("o", 2, np.array([1.0, 0.0]))
        morph = EmbeddingVector("m", 2, np.array([2.0, 1.0]))
        analytic = float(w @ (morph.values - orig.values))
        got = compute_pte(model, matrix, 0, orig, morph)
        assert got == pytest.approx(analytic, abs=1e-9)

    def test_dim_mismatch_raises(self):
        model, matrix, emb, _ = lattice_setup()
        with pytest.raises(ValueError, match="dim mismatch"):
            compute_pte(model, matrix, 0,
                        EmbeddingVector("o", 2, np.zeros(2)),
                        EmbeddingVector("m", 3, np.zeros(3)))


class TestAveragePTE:
    def test_group_means_sorted_keys(self):
        res = [
            PTEResult("d1", NarrativeDimension.SENTIMENT, TargetKind.EXPECTED_CHANGE, 1, 10.0),
            PTEResult("d2", NarrativeDimension.SENTIMENT, TargetKind.EXPECTED_CHANGE, 1, 20.0),
            PTEResult("d3", NarrativeDimension.GUIDANCE, TargetKind.REALIZED_CHANGE, 1, -5.0),
        ]
        out = average_pte(res)
        assert out[(NarrativeDimension.SENTIMENT, TargetKind.EXPECTED_CHANGE, 1)] == 15.0
        assert out[(NarrativeDimension.GUIDANCE, TargetKind.REALIZED_CHANGE, 1)] == -5.0
        assert list(out)[0][0] is NarrativeDimension.GUIDANCE  # sorted order

    def test_nonfinite_delta_rejected(self):
        with pytest.raises(ValueError):
            PTEResult("d", NarrativeDimension.SENTIMENT, TargetKind.EXPECTED_CHANGE, 1, float("nan"))

    def test_record_roundtrip(self):
        r = PTEResult("d", NarrativeDimension.JARGON, TargetKind.DISAGREEMENT, 2, 3.25)
        assert pte_result_from_record(pte_result_to_record(r)) == r


def test_fundamental_news_benchmark_delegates_to_iqr():
    model, matrix, _, _ = lattice_setup()
    X = matrix.values
    assert fundamental_news_benchmark(model, X, "emb_000") == pytest.approx(
        gbm.iqr_effect(model, X, "emb_000"))


def _doc(texts, doc_id="D1"):
    chunks = tuple(TextChunk(i, len(t.split()), t) for i, t in enumerate(texts))
    return MaskedDocument(doc_id=doc_id, call_date="2022-01-01", chunks=chunks, mask_count=0)


class TestScoreFactors:
    def test_first_integer_parsed_and_averaged(self):
        replies = iter(["7", "I would say 3, maybe more"] * 6)

        def rater(system, text, params):
            return next(replies)

        fs = score_factors(_doc(["a", "b"]), rater)
        for dim in NarrativeDimension:
            assert fs.scores[dim] == 5.0
        assert fs.n_chunks == 2

    def test_clamped_to_1_10(self):
        fs = score_factors(_doc(["a"]), lambda s, t, p: "level 37")
        assert all(v == 10.0 for v in fs.scores.values())
        fs = score_factors(_doc(["a"]), lambda s, t, p: "-4")
        assert all(v == 1.0 for v in fs.scores.values())

    def test_unparseable_skipped_and_counted(self):
        replies = iter(["no idea", "8"] * 6)
        fs = score_factors(_doc(["a", "b"]), lambda s, t, p: next(replies))
        for dim in NarrativeDimension:
            assert fs.scores[dim] == 8.0
            assert fs.skipped[dim] == 1

    def test_all_unparseable_is_missing(self):
        fs = score_factors(_doc(["a"]), lambda s, t, p: "shrug")
        assert all(v is None for v in fs.scores.values())

    def test_dimension_name_reaches_rater(self):
        seen = []

        def rater(system, text, params):
            seen.append(system)
            return "5"

        score_factors(_doc(["a"]), rater)
        assert any("Sentiment" in s for s in seen)
        assert any("Uncertainty" in s for s in seen)


class TestFactorModel:
    def test_matrix_shape_and_missing(self):
        fs = FactorScores("d", {d: (None if d is NarrativeDimension.JARGON else 5.0)
                                for d in NarrativeDimension}, 1,
                          {d: 0 for d in NarrativeDimension})
        mat, names = factor_matrix([fs])
        assert mat.shape == (1, 6)
        assert names == [d.value for d in NarrativeDimension]
        assert np.isnan(mat[0, names.index("Jargon")])

    def test_fit_reports_ratio(self):
        rng = np.random.default_rng(0)
        scores = rng.uniform(1, 10, size=(80, 6))
        y = 3.0 * scores[:, 0] + rng.normal(scale=0.5, size=80)
        hp = gbm.Hyperparams(n_trees=40, max_depth=2, min_samples_leaf=5, learning_rate=0.2)
        out = factor_model_fit(scores, y, hp, full_model_r2=0.8)
        assert out["n_test"] == 24
        assert out["r2"] > 0.5
        assert out["r2_ratio_vs_full_embeddings"] == pytest.approx(out["r2"] / 0.8)

    def test_wrong_width_raises(self):
        with pytest.raises(ValueError, match="factor columns"):
            factor_model_fit(np.zeros((10, 5)), np.zeros(10), gbm.Hyperparams())
