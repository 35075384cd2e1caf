"""End-to-end orchestration over in-memory records: mask, embed, build
targets, assemble matrices, fit the nested models, morph, and measure
predicted treatment effects.  The CLI and the what-if service are thin
wrappers over these functions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import gbm, stats
from .corpus import (
    MaskedDocument,
    TextChunk,
    TranscriptVersion,
    build_masked_document,
    ingest_transcripts,
)
from .embed import EmbeddingProvider, EmbeddingVector, embed_document
from .features import FeatureMatrix, FeatureSpec, assemble
from .morph import (
    GenerationParams,
    NarrativeDimension,
    TextGenerator,
    split_paragraphs,
    validate_and_retry,
)
from .pte import PTEResult, TargetKind, compute_pte
from .targets import (
    TargetRow,
    build_target_rows,
    event_from_record,
    forecast_from_record,
    trim_rows,
)


def mask_corpus(
    transcript_records: Sequence[dict],
    mask_token: str = "[MASK]",
    window_size: int = 512,
) -> List[MaskedDocument]:
    """Group raw transcript records by event-firm, pick the latest version of
    each, and mask/chunk the management remarks."""
    versions = ingest_transcripts(transcript_records)
    by_event: Dict[Tuple[str, str], List[TranscriptVersion]] = {}
    call_dates: Dict[Tuple[str, str], str] = {}
    for rec, v in zip(
        [r for r in transcript_records if not r.get("multi_company", False)], versions
    ):
        key = (v.event_id, v.firm_id)
        by_event.setdefault(key, []).append(v)
        call_dates[key] = str(rec.get("call_date", ""))
    docs = []
    for key in sorted(by_event):
        doc_id = f"{key[1]}|{call_dates[key]}"
        docs.append(
            build_masked_document(doc_id, call_dates[key], by_event[key], mask_token, window_size)
        )
    return docs


def embed_corpus_map(
    docs: Sequence[MaskedDocument], provider: EmbeddingProvider
) -> Dict[str, EmbeddingVector]:
    return {doc.doc_id: embed_document(doc, provider) for doc in docs}


def build_targets(
    event_records: Sequence[dict],
    forecast_records: Sequence[dict],
    trimmed: bool = True,
) -> List[TargetRow]:
    events = [event_from_record(r) for r in event_records]
    forecasts = [forecast_from_record(r) for r in forecast_records]
    rows = build_target_rows(events, forecasts)
    return trim_rows(rows) if trimmed else rows


def fundamentals_map(fundamentals_records: Sequence[dict]) -> Dict[Tuple[str, str], dict]:
    """Key fundamentals by (firm_id, call_date-ish): the synthetic schema
    stamps as_of_date strictly before the call; match on firm and nearest
    preceding date is unnecessary at desk scale, so records carry the link
    implicitly via firm ordering.  Here we key by firm_id and let the caller
    re-key per call when a firm has several rows."""
    out: Dict[Tuple[str, str], dict] = {}
    for rec in fundamentals_records:
        out[(str(rec["firm_id"]), str(rec["as_of_date"]))] = rec["values"]
    return out


def fundamentals_for_targets(
    fundamentals_records: Sequence[dict], targets: Sequence[TargetRow]
) -> Dict[Tuple[str, str], dict]:
    """For each target row, the firm's latest fundamentals dated before the
    call."""
    by_firm: Dict[str, List[dict]] = {}
    for rec in fundamentals_records:
        by_firm.setdefault(str(rec["firm_id"]), []).append(rec)
    for recs in by_firm.values():
        recs.sort(key=lambda r: str(r["as_of_date"]))
    out: Dict[Tuple[str, str], dict] = {}
    for row in targets:
        key = (row.firm_id, row.call_date.isoformat())
        if key in out:
            continue
        candidates = [
            r for r in by_firm.get(row.firm_id, []) if str(r["as_of_date"]) < key[1]
        ]
        if not candidates:
            raise KeyError(f"no fundamentals preceding call for {key}")
        out[key] = candidates[-1]["values"]
    return out


@dataclass
class TrainedTask:
    """One (target, horizon) prediction task fitted on S and ST."""

    target: TargetKind
    horizon_years: int
    rows: List[TargetRow]
    matrix_s: FeatureMatrix
    matrix_st: FeatureMatrix
    train_idx: np.ndarray
    test_idx: np.ndarray
    model_s: gbm.BoostedModel
    model_st: gbm.BoostedModel
    y: np.ndarray


def target_values(rows: Sequence[TargetRow], target: TargetKind) -> List[Optional[float]]:
    if target == TargetKind.EXPECTED_CHANGE:
        return [r.expected_change_bps for r in rows]
    if target == TargetKind.REALIZED_CHANGE:
        return [r.realized_change_bps for r in rows]
    return [r.disagreement_bps for r in rows]


def train_task(
    target: TargetKind,
    horizon: int,
    all_rows: Sequence[TargetRow],
    fundamentals_records: Sequence[dict],
    embeddings: Dict[str, EmbeddingVector],
    hp: gbm.Hyperparams,
    test_fraction: float = 0.30,
) -> TrainedTask:
    rows = [r for r in all_rows if r.horizon_years == horizon]
    y_all = target_values(rows, target)
    rows = [r for r, v in zip(rows, y_all) if v is not None]
    if len(rows) < 10:
        raise ValueError(f"sample too small for {target.value} {horizon}Y")
    y = np.asarray([v for v in target_values(rows, target)], dtype=np.float64)
    funda = fundamentals_for_targets(fundamentals_records, rows)
    matrix_s = assemble(FeatureSpec.S, funda, embeddings, rows)
    matrix_st = assemble(FeatureSpec.ST, funda, embeddings, rows)
    dates = [k[1] for k in matrix_st.row_keys]
    firms = [k[0] for k in matrix_st.row_keys]
    train_idx, test_idx = gbm.temporal_split(dates, firms, test_fraction)
    model_s = gbm.fit(matrix_s.values[train_idx], y[train_idx], hp, matrix_s.feature_names)
    model_st = gbm.fit(matrix_st.values[train_idx], y[train_idx], hp, matrix_st.feature_names)
    return TrainedTask(
        target=target,
        horizon_years=horizon,
        rows=rows,
        matrix_s=matrix_s,
        matrix_st=matrix_st,
        train_idx=train_idx,
        test_idx=test_idx,
        model_s=model_s,
        model_st=model_st,
        y=y,
    )


def clark_west_for_task(task: TrainedTask) -> stats.CWResult:
    yhat_r = gbm.predict(task.model_s, task.matrix_s.values[task.test_idx])
    yhat_u = gbm.predict(task.model_st, task.matrix_st.values[task.test_idx])
    return stats.clark_west(
        task.y[task.test_idx], yhat_r, yhat_u, horizon_steps=task.horizon_years
    )


def measure_ptes(
    task: TrainedTask,
    docs_by_id: Dict[str, MaskedDocument],
    embeddings: Dict[str, EmbeddingVector],
    provider: EmbeddingProvider,
    morph_generators: Dict[NarrativeDimension, TextGenerator],
    judge_gen: TextGenerator,
    params: GenerationParams = GenerationParams(),
    max_attempts: int = 3,
) -> List[PTEResult]:
    """Morph, judge, re-embed and difference predictions for every accepted
    morph on the test split."""
    results: List[PTEResult] = []
    for pos in task.test_idx:
        firm_id, call_date, _ = task.matrix_st.row_keys[int(pos)]
        doc_id = f"{firm_id}|{call_date}"
        doc = docs_by_id.get(doc_id)
        if doc is None:
            continue
        paragraphs = [c.text for c in doc.chunks]
        orig_emb = embeddings[doc_id]
        for dim, gen in morph_generators.items():
            res = validate_and_retry(
                doc_id, paragraphs, dim, gen, judge_gen, params, max_attempts
            )
            if not res.accepted:
                continue
            morphed_doc = MaskedDocument(
                doc_id=doc_id,
                call_date=doc.call_date,
                chunks=tuple(
                    TextChunk(i, len(p.split()), p)
                    for i, p in enumerate(split_paragraphs(res.morphed_text))
                ),
                mask_count=doc.mask_count,
            )
            morph_emb = embed_document(morphed_doc, provider)
            delta = compute_pte(task.model_st, task.matrix_st, int(pos), orig_emb, morph_emb)
            results.append(
                PTEResult(
                    doc_id=doc_id,
                    dimension=dim,
                    target=task.target,
                    horizon_years=task.horizon_years,
                    delta_bps=delta,
                )
            )
    return results
