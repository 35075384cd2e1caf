"""Acceptance suite: one test (one pass/fail line under -v) per shipping
criterion, each checked at its stated tolerance against an independent
oracle, golden file, or analytic value."""

import time
from pathlib import Path

import numpy as np
import pytest

from narralab import gbm, pipeline, reports, stats
from narralab.corpus import mask_numerals
from narralab.embed import hashing_embedder
from narralab.features import FeatureSpec, assemble
from narralab.morph import (
    NarrativeDimension,
    judge_template,
    morph_prompt,
    numeral_preservation_check,
)
from narralab.pte import TargetKind, average_pte, compute_pte
from narralab.synth import (
    DEFAULT_LOADINGS,
    SynthConfig,
    generate_corpus,
    stub_generator_for,
)
from narralab.targets import disagreement

from tests.test_gbm import oracle_best_split
from tests.test_morph import PROMPT_GOLDENS
from tests.test_pte import lattice_setup
from tests.test_stats import oracle_clark_west_t

GOLDEN = Path(__file__).parent / "golden"


# ---------------------------------------------------------------------------
# Numeral masking

def test_masking_ten_thousand_docs_digit_free_and_idempotent():
    rng = np.random.default_rng(41)
    vocab = ["revenue", "grew", "$1.2", "billion", "by", "FY2027,", "up", "3x",
             "margin", "was", "41.5%", "(2022)", "guidance", "12,000", "units",
             "steady", "outlook", "strong", "Q4", "euro2024"]
    start = time.time()
    for _ in range(10_000):
        text = " ".join(rng.choice(vocab, size=rng.integers(5, 40)))
        masked, _ = mask_numerals(text, "[MASK]")
        assert not any(ch.isdigit() for ch in masked)
        again, extra = mask_numerals(masked, "[MASK]")
        assert again == masked and extra == 0
    assert time.time() - start < 60.0


# ---------------------------------------------------------------------------
# Feature assembly

def test_feature_width_identity_is_embedding_dim():
    world = _tiny_world()
    rows = pipeline.build_targets(world[2], world[1], trimmed=False)
    provider = hashing_embedder(seed=0, dim=768)
    docs = pipeline.mask_corpus(world[0])
    emb = pipeline.embed_corpus_map(docs, provider)
    rows1 = [r for r in rows if r.horizon_years == 1]
    funda = pipeline.fundamentals_for_targets(world[3], rows1)
    m_s = assemble(FeatureSpec.S, funda, emb, rows1)
    m_st = assemble(FeatureSpec.ST, funda, emb, rows1)
    assert m_st.values.shape[1] - m_s.values.shape[1] == 768


# ---------------------------------------------------------------------------
# Fit metrics

def test_metric_fixtures_to_1e12():
    fixtures = [
        ([1.0, 2.0, 3.0], [1.0, 2.0, 3.0], 0.0, 1.0),
        ([1.0, 2.0, 3.0], [2.0, 2.0, 2.0], 2.0 / 3.0, 0.0),
        ([0.0, 0.0, 4.0], [1.0, 1.0, 1.0], 11.0 / 3.0, 1.0 - 11.0 / (32.0 / 3.0)),
        ([1.0, 1.0, 1.0, 5.0], [2.0, 0.0, 2.0, 4.0], 1.0, 1.0 - 4.0 / 12.0),
        ([-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0], 2.0 / 3.0, 1.0 - 2.0 / 8.0),
    ]
    for y, yhat, want_mse, want_r2 in fixtures:
        y, yhat = np.asarray(y), np.asarray(yhat)
        assert abs(gbm.mse(y, yhat) - want_mse) < 1e-12
        assert abs(gbm.r2(y, yhat) - want_r2) < 1e-12
    y = np.array([3.0, 7.0, 5.0, 1.0])
    assert gbm.r2(y, np.full_like(y, y.mean())) == 0.0
    assert gbm.r2(y, y) == 1.0


# ---------------------------------------------------------------------------
# Gradient boosting

def test_gbm_split_matches_exhaustive_oracle():
    rng = np.random.default_rng(5)
    for trial in range(8):
        n = int(rng.integers(30, 201))
        p = int(rng.integers(1, 6))
        X = rng.normal(size=(n, p))
        if trial % 2:
            X = np.round(X, 1)
        y = rng.normal(size=n)
        min_leaf = int(rng.integers(1, 8))
        ours = gbm._best_split(X, y, np.arange(n), min_leaf)
        theirs = oracle_best_split(X, y, min_leaf)
        if theirs is None:
            assert ours is None
        else:
            assert ours is not None
            assert ours[0] == theirs[0]
            assert abs(ours[1] - theirs[1]) < 1e-9


def test_gbm_fits_step_function_and_training_error_is_monotone():
    rng = np.random.default_rng(9)
    X = rng.uniform(-1, 1, size=(300, 1))
    y = np.where(X[:, 0] > 0.0, 2.0, -1.0)
    hp = gbm.Hyperparams(n_trees=50, max_depth=2, min_samples_leaf=5,
                         learning_rate=0.3, subsample=1.0, seed=0)
    model = gbm.fit(X, y, hp, ["x"])
    assert gbm.mse(y, gbm.predict(model, X)) < 1e-3

    yn = y + rng.normal(scale=0.3, size=300)
    prev = np.inf
    for k in (1, 5, 10, 25, 50):
        hp_k = gbm.Hyperparams(n_trees=k, max_depth=2, min_samples_leaf=5,
                               learning_rate=0.3, subsample=1.0, seed=0)
        err = gbm.mse(yn, gbm.predict(gbm.fit(X, yn, hp_k, ["x"]), X))
        assert err <= prev + 1e-12
        prev = err


def test_gbm_same_seed_is_bitwise_reproducible():
    rng = np.random.default_rng(13)
    X = rng.normal(size=(120, 4))
    y = rng.normal(size=120)
    hp = gbm.Hyperparams(n_trees=30, max_depth=3, min_samples_leaf=3,
                         learning_rate=0.1, subsample=0.7, seed=99)
    a = gbm.fit(X, y, hp, list("abcd"))
    b = gbm.fit(X, y, hp, list("abcd"))
    assert gbm.model_to_json(a) == gbm.model_to_json(b)
    assert np.array_equal(gbm.predict(a, X), gbm.predict(b, X))


# ---------------------------------------------------------------------------
# Clark–West nested test

def test_clark_west_matches_brute_force_oracle():
    y = np.arange(1.0, 9.0)
    yhat_r = np.full(8, 4.5)
    yhat_u = y + 0.1 * np.array([1, -1] * 4)
    res = stats.clark_west(y, yhat_r, yhat_u, horizon_steps=1)
    _, _, want_t = oracle_clark_west_t(y, yhat_r, yhat_u, lags=0)
    assert abs(res.t_stat - want_t) < 1e-10
    with pytest.raises(ValueError, match="degenerate"):
        stats.clark_west(y, yhat_r, yhat_r.copy(), horizon_steps=1)


def _cw_rep(rng, beta, noise_sd, n):
    x = rng.normal(size=n)
    y = beta * x + rng.normal(scale=noise_sd, size=n)
    half = n // 2
    X = np.column_stack([np.ones(half), x[:half]])
    coef, *_ = np.linalg.lstsq(X, y[:half], rcond=None)
    yhat_u = coef[0] + coef[1] * x[half:]
    yhat_r = np.full(n - half, y[:half].mean())
    return stats.clark_west(y[half:], yhat_r, yhat_u, horizon_steps=1)


def test_clark_west_null_rejection_near_nominal():
    rng = np.random.default_rng(2024)
    rejections = sum(
        _cw_rep(rng, 0.0, 1.0, 100).p_value_one_sided < 0.05 for _ in range(200)
    )
    assert 0.02 <= rejections / 200 <= 0.10


def test_clark_west_detects_planted_text_signal():
    start = time.time()
    rng = np.random.default_rng(7)
    rejections = sum(
        _cw_rep(rng, 30.0, 50.0, 500).p_value_one_sided < 0.05 for _ in range(50)
    )
    assert rejections / 50 >= 0.80
    assert time.time() - start < 300.0


def test_newey_west_fixtures():
    x = np.array([1.0, -1.0, 1.0, -1.0])
    assert stats.newey_west_variance(x, lags=1) == 0.25
    y = np.array([0.3, -1.2, 0.9, 2.1, -0.5])
    centered = y - y.mean()
    assert abs(stats.newey_west_variance(y, lags=0)
               - float(centered @ centered) / len(y)) < 1e-15


# ---------------------------------------------------------------------------
# Priced treatment effects

def test_pte_identity_and_linear_oracle():
    from narralab.embed import EmbeddingVector

    model, matrix, emb, w = lattice_setup()
    for idx, key in enumerate(matrix.row_keys):
        e = emb[f"{key[0]}|{key[1]}"]
        assert compute_pte(model, matrix, idx, e, e) == 0.0
    orig = EmbeddingVector("o", 2, np.array([1.0, 0.0]))
    morph = EmbeddingVector("m", 2, np.array([2.0, 1.0]))
    analytic = float(w @ (morph.values - orig.values))
    assert abs(compute_pte(model, matrix, 0, orig, morph) - analytic) < 1e-9


# ---------------------------------------------------------------------------
# End-to-end planted-loading recovery

def test_end_to_end_recovers_planted_loadings():
    start = time.time()
    world = generate_corpus(SynthConfig(seed=7, n_firms=100, n_events=600))
    docs = pipeline.mask_corpus(world[0])
    provider = hashing_embedder(seed=7, dim=768)
    emb = pipeline.embed_corpus_map(docs, provider)
    rows = pipeline.build_targets(world[2], world[1], trimmed=False)
    hp = gbm.Hyperparams(n_trees=200, max_depth=3, min_samples_leaf=10,
                         learning_rate=0.1, subsample=1.0, seed=7)
    task = pipeline.train_task(
        TargetKind.EXPECTED_CHANGE, 1, rows, world[3], emb, hp
    )
    gens = {d: stub_generator_for(d) for d in NarrativeDimension}
    results = pipeline.measure_ptes(
        task, {d.doc_id: d for d in docs}, emb, provider, gens,
        lambda prompt, text, params: "1. Yes",
    )
    averages = average_pte(results)
    for dim in NarrativeDimension:
        got = averages[(dim, TargetKind.EXPECTED_CHANGE, 1)]
        want = DEFAULT_LOADINGS[dim]
        assert abs(got - want) <= 10.0, f"{dim.value}: {got} vs {want}"
        assert np.sign(got) == np.sign(want), dim.value
    assert time.time() - start < 600.0


# ---------------------------------------------------------------------------
# Morphing safeguards

def test_numeral_preservation_fuzz_finds_no_counterexample():
    rng = np.random.default_rng(17)
    words = ["growth", "of", "42%", "and", "$3.5", "million", "in", "2022,",
             "up", "7x", "from", "12,000", "units", "steady", "margins"]
    for _ in range(10_000):
        orig = " ".join(rng.choice(words, size=rng.integers(3, 15)))
        assert numeral_preservation_check(orig, orig)
        tokens = orig.split()
        digit_idx = [i for i, t in enumerate(tokens) if any(c.isdigit() for c in t)]
        if not digit_idx:
            continue
        kind = rng.integers(3)
        mutated = list(tokens)
        j = int(rng.choice(digit_idx))
        if kind == 0:
            mutated[j] = mutated[j] + "9"
        elif kind == 1:
            del mutated[j]
        else:
            mutated.append(mutated[j])
        assert not numeral_preservation_check(orig, " ".join(mutated))


def test_prompt_registry_matches_goldens():
    for dim, filename in PROMPT_GOLDENS.items():
        golden = (GOLDEN / "prompts" / filename).read_text().rstrip("\n")
        assert morph_prompt(dim) == golden
    golden = (GOLDEN / "prompts" / "judge.txt").read_text().rstrip("\n")
    assert judge_template() == golden


# ---------------------------------------------------------------------------
# Targets

def test_disagreement_fixture_to_1e9():
    assert abs(disagreement([1.0, 3.0], 100.0) - 141.4213562373095) < 1e-9


# ---------------------------------------------------------------------------
# Report layouts

def test_report_layouts_match_goldens():
    pairs = [
        (reports.render_accuracy_table(reports.REFERENCE_ACCURACY), "accuracy_table.txt"),
        (reports.render_analyst_benchmark_table(reports.REFERENCE_ANALYST_BENCHMARK),
         "analyst_benchmark_table.txt"),
        (reports.render_nested_test_table(reports.REFERENCE_NESTED_TEST),
         "nested_test_table.txt"),
        (reports.render_pte_level_csv(reports.REFERENCE_PTE_LEVELS,
                                      reports.REFERENCE_FUNDAMENTAL_NEWS_BPS),
         "pte_levels.csv"),
        (reports.render_pte_disagreement_csv(reports.REFERENCE_PTE_DISAGREEMENT,
                                             reports.REFERENCE_FUNDAMENTAL_NEWS_BPS),
         "pte_disagreement.csv"),
    ]
    for rendered, name in pairs:
        assert rendered == (GOLDEN / name).read_text(), name
    row = next(l for l in pairs[1][0].splitlines() if l.startswith("MSE (Forecast)"))
    assert "0.001116" in row


# ---------------------------------------------------------------------------

_WORLD_CACHE = {}


def _tiny_world():
    if "w" not in _WORLD_CACHE:
        _WORLD_CACHE["w"] = generate_corpus(SynthConfig(seed=2, n_firms=8, n_events=50))
    return _WORLD_CACHE["w"]
