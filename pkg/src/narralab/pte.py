"""Predicted treatment effects of narrative morphs on predicted beliefs and
earnings, their aggregation, linguistic factor scoring, and the
fundamental-news benchmark they are compared against.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import gbm
from .corpus import MaskedDocument
from .embed import EmbeddingVector
from .features import FeatureMatrix, replace_embedding
from .morph import GenerationParams, NarrativeDimension, TextGenerator

RATING_MIN, RATING_MAX = 1.0, 10.0

_INT_RE = re.compile(r"-?\d+")


class TargetKind(str, Enum):
    EXPECTED_CHANGE = "ExpectedChange"
    DISAGREEMENT = "Disagreement"
    REALIZED_CHANGE = "RealizedChange"


@dataclass(frozen=True)
class PTEResult:
    doc_id: str
    dimension: NarrativeDimension
    target: TargetKind
    horizon_years: int
    delta_bps: float

    def __post_init__(self):
        if not np.isfinite(self.delta_bps):
            raise ValueError("delta_bps must be finite")


@dataclass(frozen=True)
class FactorScores:
    doc_id: str
    scores: Mapping[NarrativeDimension, Optional[float]]
    n_chunks: int
    skipped: Mapping[NarrativeDimension, int]


def compute_pte(
    model_st: gbm.BoostedModel,
    matrix: FeatureMatrix,
    row_index: int,
    orig_emb: EmbeddingVector,
    morph_emb: EmbeddingVector,
) -> float:
    """Prediction on the morphed embedding minus prediction on the original,
    fundamentals held fixed (identical morph -> exactly 0)."""
    if orig_emb.dim != morph_emb.dim:
        raise ValueError("embedding dim mismatch")
    row_orig = replace_embedding(matrix, row_index, orig_emb)
    row_morph = replace_embedding(matrix, row_index, morph_emb)
    pred = gbm.predict(model_st, np.vstack([row_orig, row_morph]))
    return float(pred[1] - pred[0])


def average_pte(
    results: Sequence[PTEResult],
) -> Dict[Tuple[NarrativeDimension, TargetKind, int], float]:
    """Arithmetic group means keyed by (dimension, target, horizon), in
    deterministic sorted key order."""
    groups: Dict[Tuple[NarrativeDimension, TargetKind, int], List[float]] = {}
    for r in results:
        groups.setdefault((r.dimension, r.target, r.horizon_years), []).append(r.delta_bps)
    return {
        key: float(np.mean(groups[key]))
        for key in sorted(groups, key=lambda k: (k[0].value, k[1].value, k[2]))
    }


def fundamental_news_benchmark(
    model_st: gbm.BoostedModel, X: np.ndarray, sue_feature: str = "sue"
) -> float:
    """Model response to an interquartile move in the earnings-surprise
    feature; the yardstick reported beside the narrative effects."""
    return gbm.iqr_effect(model_st, X, sue_feature)


_FACTOR_PROMPT = (
    "You will be shown a passage from a company presentation. Rate, on an "
    "integer scale from 1 to 10, how strongly the passage expresses the "
    "following characteristic: {dimension}. Reply with the number only."
)


def score_factors(
    doc: MaskedDocument,
    rater: TextGenerator,
    params: GenerationParams = GenerationParams(),
) -> FactorScores:
    """Per-dimension mean of per-chunk integer ratings on a 1-10 scale.

    The first integer in each reply is parsed and clamped to [1, 10];
    unparseable replies are skipped and counted.  A dimension with no
    parseable rating scores as missing.
    """
    if not doc.chunks:
        raise ValueError("document has no chunks")
    scores: Dict[NarrativeDimension, Optional[float]] = {}
    skipped: Dict[NarrativeDimension, int] = {}
    for dim in NarrativeDimension:
        system = _FACTOR_PROMPT.format(dimension=dim.value)
        ratings: List[float] = []
        n_skipped = 0
        for chunk in doc.chunks:
            reply = rater(system, chunk.text, params)
            m = _INT_RE.search(reply)
            if m is None:
                n_skipped += 1
                continue
            ratings.append(min(RATING_MAX, max(RATING_MIN, float(int(m.group())))))
        scores[dim] = float(np.mean(ratings)) if ratings else None
        skipped[dim] = n_skipped
    return FactorScores(doc_id=doc.doc_id, scores=scores, n_chunks=len(doc.chunks), skipped=skipped)


def factor_matrix(all_scores: Sequence[FactorScores]) -> Tuple[np.ndarray, List[str]]:
    """Stack factor scores into an (n, 6) design with NaN for missing."""
    names = [d.value for d in NarrativeDimension]
    rows = []
    for fs in all_scores:
        rows.append([np.nan if fs.scores[d] is None else fs.scores[d] for d in NarrativeDimension])
    return np.asarray(rows, dtype=np.float64), names


def factor_model_fit(
    scores: np.ndarray,
    y: Sequence[float],
    hp: gbm.Hyperparams,
    full_model_r2: Optional[float] = None,
) -> Dict[str, object]:
    """Refit the boosting model on the six factor columns alone.

    Reports test metrics on a temporal-style 70/30 tail split of the given
    rows (assumed date-sorted) and, when the full-embedding model's R^2 is
    supplied, the ratio of explanatory capacities.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 2 or scores.shape[1] != len(NarrativeDimension):
        raise ValueError(f"expected {len(NarrativeDimension)} factor columns")
    y = np.asarray(y, dtype=np.float64)
    n = scores.shape[0]
    n_test = max(1, int(np.ceil(0.30 * n)))
    trn, tst = np.arange(n - n_test), np.arange(n - n_test, n)
    names = [d.value for d in NarrativeDimension]
    model = gbm.fit(scores[trn], y[trn], hp, names)
    yhat = gbm.predict(model, scores[tst])
    test_mse = gbm.mse(y[tst], yhat)
    try:
        test_r2 = gbm.r2(y[tst], yhat)
    except ValueError:
        test_r2 = float("-inf")  # zero-variance tail: report as non-positive
    out: Dict[str, object] = {"mse": test_mse, "r2": test_r2, "n_test": int(n_test)}
    if full_model_r2 is not None and full_model_r2 > 0 and np.isfinite(test_r2):
        out["r2_ratio_vs_full_embeddings"] = test_r2 / full_model_r2
    return out


def pte_result_to_record(r: PTEResult) -> dict:
    return {
        "doc_id": r.doc_id,
        "dimension": r.dimension.value,
        "target": r.target.value,
        "horizon_years": r.horizon_years,
        "delta_bps": r.delta_bps,
    }


def pte_result_from_record(rec: dict) -> PTEResult:
    return PTEResult(
        doc_id=str(rec["doc_id"]),
        dimension=NarrativeDimension.parse(rec["dimension"]),
        target=TargetKind(rec["target"]),
        horizon_years=int(rec["horizon_years"]),
        delta_bps=float(rec["delta_bps"]),
    )
