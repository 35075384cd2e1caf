"""Command-line front end: each subcommand runs one pipeline stage against a
run directory, reading the stage outputs of its predecessors.

Exit codes: 0 success, 1 validation error (bad config, missing stage,
degenerate data), 2 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from . import gbm, pipeline, reports, stats
from .corpus import masked_document_from_record, masked_document_to_record
from .embed import embedding_from_record, embedding_to_record, hashing_embedder, remote_embedder
from .features import FeatureSpec, assemble
from .morph import GenerationParams, NarrativeDimension
from .pte import (
    TargetKind,
    factor_matrix,
    factor_model_fit,
    score_factors,
)
from .runs import RunStore
from .synth import (
    MARKER_TOKENS,
    SynthConfig,
    generate_corpus,
    ground_truth_to_record,
    stub_generator_for,
)
from .targets import target_row_from_record, target_row_to_record

DEFAULT_CONFIG: Dict[str, dict] = {
    "seed": 7,
    "synth": {"n_firms": 40, "n_events": 240, "noise_sd_bps": 20.0, "sue_effect_bps": 50.0},
    "mask": {"mask_token": "[MASK]", "window_size": 512},
    "embed": {"dim": 768, "provider": "hashing"},
    "train": {
        "horizon": 1,
        "targets": ["ExpectedChange", "RealizedChange", "Disagreement"],
        "n_trees": 200,
        "max_depth": 3,
        "learning_rate": 0.1,
        "min_samples_leaf": 10,
        "subsample": 1.0,
    },
    "morph": {"max_attempts": 3},
    "serve": {"port": 8765},
}

STAGES = [
    "ingest",
    "mask",
    "embed",
    "targets",
    "features",
    "train",
    "evaluate",
    "cw",
    "pdp",
    "morph",
    "pte",
    "factors",
    "synth",
    "report",
    "serve",
]


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def load_config(path: Optional[str], seed_override: Optional[int]) -> dict:
    cfg = DEFAULT_CONFIG
    if path:
        cfg = _merge(cfg, json.loads(Path(path).read_text()))
    if seed_override is not None:
        cfg = _merge(cfg, {"seed": seed_override})
    return cfg


def _provider(cfg: dict):
    emb = cfg["embed"]
    if emb.get("provider", "hashing") == "hashing":
        return hashing_embedder(seed=cfg["seed"], dim=int(emb["dim"]))
    return remote_embedder(emb["endpoint"], emb.get("model", "default"), int(emb["dim"]))


def _hp(cfg: dict) -> gbm.Hyperparams:
    t = cfg["train"]
    return gbm.Hyperparams(
        n_trees=int(t["n_trees"]),
        max_depth=int(t["max_depth"]),
        min_samples_leaf=int(t["min_samples_leaf"]),
        learning_rate=float(t["learning_rate"]),
        subsample=float(t["subsample"]),
        seed=int(cfg["seed"]),
    )


def _task_name(target: str, horizon: int) -> str:
    return f"{target}_{horizon}Y"


# ---------------------------------------------------------------------------
# Stage implementations


def stage_synth(store: RunStore, manifest, cfg: dict) -> None:
    s = cfg["synth"]
    scfg = SynthConfig(
        seed=int(cfg["seed"]),
        n_firms=int(s["n_firms"]),
        n_events=int(s["n_events"]),
        noise_sd_bps=float(s["noise_sd_bps"]),
        sue_effect_bps=float(s["sue_effect_bps"]),
    )
    transcripts, forecasts, events, fundamentals, gt = generate_corpus(scfg)
    store.record_output(manifest, "synth_transcripts", store.write_jsonl("transcripts.jsonl", transcripts), scfg.seed)
    store.record_output(manifest, "synth_forecasts", store.write_jsonl("forecasts.jsonl", forecasts))
    store.record_output(manifest, "synth_events", store.write_jsonl("events.jsonl", events))
    store.record_output(manifest, "synth_fundamentals", store.write_jsonl("fundamentals.jsonl", fundamentals))
    store.record_output(manifest, "synth_ground_truth", store.write_json("ground_truth.json", ground_truth_to_record(gt)))


def stage_ingest(store: RunStore, manifest, cfg: dict, input_path: Optional[str]) -> None:
    if input_path:
        records = [json.loads(line) for line in Path(input_path).read_text().splitlines() if line.strip()]
    else:
        store.stage_path("synth_transcripts")
        records = store.read_jsonl("transcripts.jsonl")
    kept = [r for r in records if not r.get("multi_company", False)]
    store.record_output(manifest, "ingest", store.write_jsonl("transcripts_ingested.jsonl", kept))


def stage_mask(store: RunStore, manifest, cfg: dict) -> None:
    store.stage_path("ingest")
    records = store.read_jsonl("transcripts_ingested.jsonl")
    m = cfg["mask"]
    docs = pipeline.mask_corpus(records, m["mask_token"], int(m["window_size"]))
    store.record_output(
        manifest, "mask", store.write_jsonl("masked_docs.jsonl", [masked_document_to_record(d) for d in docs])
    )


def stage_embed(store: RunStore, manifest, cfg: dict) -> None:
    store.stage_path("mask")
    docs = [masked_document_from_record(r) for r in store.read_jsonl("masked_docs.jsonl")]
    provider = _provider(cfg)
    embs = pipeline.embed_corpus_map(docs, provider)
    store.record_output(
        manifest,
        "embed",
        store.write_jsonl("embeddings.jsonl", [embedding_to_record(embs[k]) for k in sorted(embs)]),
        cfg["seed"],
    )


def stage_targets(store: RunStore, manifest, cfg: dict) -> None:
    store.stage_path("synth_events")
    events = store.read_jsonl("events.jsonl")
    forecasts = store.read_jsonl("forecasts.jsonl")
    rows = pipeline.build_targets(events, forecasts)
    store.record_output(
        manifest, "targets", store.write_jsonl("target_rows.jsonl", [target_row_to_record(r) for r in rows])
    )


def _load_embeddings(store: RunStore) -> dict:
    return {r["doc_id"]: embedding_from_record(r) for r in store.read_jsonl("embeddings.jsonl")}


def stage_features(store: RunStore, manifest, cfg: dict) -> None:
    store.stage_path("targets")
    store.stage_path("embed")
    rows = [target_row_from_record(r) for r in store.read_jsonl("target_rows.jsonl")]
    embeddings = _load_embeddings(store)
    fundamentals = store.read_jsonl("fundamentals.jsonl")
    horizon = int(cfg["train"]["horizon"])
    for target_name in cfg["train"]["targets"]:
        target = TargetKind(target_name)
        task_rows = [r for r in rows if r.horizon_years == horizon]
        y = pipeline.target_values(task_rows, target)
        task_rows = [r for r, v in zip(task_rows, y) if v is not None]
        if len(task_rows) < 10:
            raise ValueError(f"sample too small for {target_name}")
        y = np.asarray([v for v in pipeline.target_values(task_rows, target)], dtype=np.float64)
        funda = pipeline.fundamentals_for_targets(fundamentals, task_rows)
        mat_s = assemble(FeatureSpec.S, funda, embeddings, task_rows)
        mat_st = assemble(FeatureSpec.ST, funda, embeddings, task_rows)
        name = f"features_{_task_name(target_name, horizon)}.npz"
        np.savez_compressed(
            store.dir / name,
            s_values=mat_s.values,
            st_values=mat_st.values,
            y=y,
            s_names=np.array(mat_s.feature_names),
            st_names=np.array(mat_st.feature_names),
            row_keys=np.array(["|".join(map(str, k)) for k in mat_st.row_keys]),
        )
        store.record_output(manifest, f"features_{_task_name(target_name, horizon)}", store.dir / name)


def _load_features(store: RunStore, task: str):
    path = store.stage_path(f"features_{task}")
    data = np.load(path, allow_pickle=False)
    return data


def stage_train(store: RunStore, manifest, cfg: dict) -> None:
    horizon = int(cfg["train"]["horizon"])
    hp = _hp(cfg)
    for target_name in cfg["train"]["targets"]:
        task = _task_name(target_name, horizon)
        data = _load_features(store, task)
        dates = [k.split("|")[1] for k in data["row_keys"]]
        firms = [k.split("|")[0] for k in data["row_keys"]]
        train_idx, test_idx = gbm.temporal_split(dates, firms)
        y = data["y"]
        model_s = gbm.fit(data["s_values"][train_idx], y[train_idx], hp, list(data["s_names"]))
        model_st = gbm.fit(data["st_values"][train_idx], y[train_idx], hp, list(data["st_names"]))
        p_s = store.write_text(f"model_S_{task}.json", gbm.model_to_json(model_s))
        p_st = store.write_text(f"model_ST_{task}.json", gbm.model_to_json(model_st))
        store.write_json(f"split_{task}.json", {"train": train_idx.tolist(), "test": test_idx.tolist()})
        store.record_output(manifest, f"model_S_{task}", p_s, hp.seed)
        store.record_output(manifest, f"model_ST_{task}", p_st, hp.seed)


def _load_task(store: RunStore, task: str):
    data = _load_features(store, task)
    split = store.read_json(f"split_{task}.json")
    model_s = gbm.model_from_json(store.stage_path(f"model_S_{task}").read_text())
    model_st = gbm.model_from_json(store.stage_path(f"model_ST_{task}").read_text())
    return data, np.asarray(split["train"]), np.asarray(split["test"]), model_s, model_st


def stage_evaluate(store: RunStore, manifest, cfg: dict) -> None:
    horizon = int(cfg["train"]["horizon"])
    out = {}
    for target_name in cfg["train"]["targets"]:
        task = _task_name(target_name, horizon)
        data, _, test_idx, model_s, model_st = _load_task(store, task)
        y = data["y"][test_idx]
        rep_s = gbm.evaluate(model_s, data["s_values"][test_idx], y)
        rep_st = gbm.evaluate(model_st, data["st_values"][test_idx], y)
        out[task] = {
            "S": {"mse": rep_s.mse, "r2_pct": 100.0 * rep_s.r2, "n_test": rep_s.n_test},
            "ST": {"mse": rep_st.mse, "r2_pct": 100.0 * rep_st.r2, "n_test": rep_st.n_test},
        }
    store.record_output(manifest, "evaluate", store.write_json("eval.json", out))


def stage_cw(store: RunStore, manifest, cfg: dict) -> None:
    horizon = int(cfg["train"]["horizon"])
    out = {}
    for target_name in cfg["train"]["targets"]:
        task = _task_name(target_name, horizon)
        data, _, test_idx, model_s, model_st = _load_task(store, task)
        res = stats.clark_west(
            data["y"][test_idx],
            gbm.predict(model_s, data["s_values"][test_idx]),
            gbm.predict(model_st, data["st_values"][test_idx]),
            horizon_steps=horizon,
        )
        out[task] = res.__dict__
    store.record_output(manifest, "cw", store.write_json("cw.json", out))


def stage_pdp(store: RunStore, manifest, cfg: dict) -> None:
    horizon = int(cfg["train"]["horizon"])
    out = {}
    for target_name in cfg["train"]["targets"]:
        task = _task_name(target_name, horizon)
        data, _, _, _, model_st = _load_task(store, task)
        X = data["st_values"]
        col = X[:, list(data["st_names"]).index("sue")]
        grid = [float(g) for g in np.quantile(col[~np.isnan(col)], np.linspace(0.05, 0.95, 9))]
        curve = gbm.partial_dependence(model_st, X, "sue", grid)
        out[task] = {
            "grid": grid,
            "curve": curve,
            "iqr_effect_bps": gbm.iqr_effect(model_st, X, "sue"),
        }
    store.record_output(manifest, "pdp", store.write_json("pdp_sue.json", out))


def _morph_generators():
    return {dim: stub_generator_for(dim) for dim in NarrativeDimension}


def stage_morph(store: RunStore, manifest, cfg: dict) -> None:
    from .morph import always_yes_judge, morph_result_to_record, validate_and_retry

    store.stage_path("mask")
    docs = [masked_document_from_record(r) for r in store.read_jsonl("masked_docs.jsonl")]
    params = GenerationParams()
    results = []
    for doc in docs:
        paragraphs = [c.text for c in doc.chunks]
        for dim, gen in _morph_generators().items():
            res = validate_and_retry(
                doc.doc_id, paragraphs, dim, gen, always_yes_judge, params,
                int(cfg["morph"]["max_attempts"]),
            )
            results.append(morph_result_to_record(res))
    store.record_output(manifest, "morph", store.write_jsonl("morphs.jsonl", results))


def stage_pte(store: RunStore, manifest, cfg: dict) -> None:
    from .embed import embed_document
    from .features import EMB_PREFIX

    horizon = int(cfg["train"]["horizon"])
    provider = _provider(cfg)
    docs = {d.doc_id: d for d in (masked_document_from_record(r) for r in store.read_jsonl("masked_docs.jsonl"))}
    embeddings = _load_embeddings(store)
    morphs = [r for r in store.read_jsonl("morphs.jsonl") if r["accepted"]]
    morph_embs = {}
    for rec in morphs:
        from .corpus import MaskedDocument, TextChunk
        from .morph import split_paragraphs

        paras = split_paragraphs(rec["morphed_text"])
        doc = MaskedDocument(
            doc_id=rec["doc_id"],
            call_date=docs[rec["doc_id"]].call_date,
            chunks=tuple(TextChunk(i, len(p.split()), p) for i, p in enumerate(paras)),
            mask_count=docs[rec["doc_id"]].mask_count,
        )
        morph_embs[(rec["doc_id"], rec["dimension"])] = embed_document(doc, provider)

    results = []
    summary = {}
    for target_name in cfg["train"]["targets"]:
        task = _task_name(target_name, horizon)
        data, _, test_idx, _, model_st = _load_task(store, task)
        names = list(data["st_names"])
        emb_cols = [i for i, n in enumerate(names) if n.startswith(EMB_PREFIX)]
        keys = [k for k in data["row_keys"]]
        for pos in test_idx:
            firm, date, _h = keys[int(pos)].split("|")
            doc_id = f"{firm}|{date}"
            if doc_id not in embeddings:
                continue
            base_row = data["st_values"][int(pos)].copy()
            base_row[emb_cols] = embeddings[doc_id].values
            base_pred = gbm.predict(model_st, base_row.reshape(1, -1))[0]
            for dim in NarrativeDimension:
                memb = morph_embs.get((doc_id, dim.value))
                if memb is None:
                    continue
                row = base_row.copy()
                row[emb_cols] = memb.values
                delta = float(gbm.predict(model_st, row.reshape(1, -1))[0] - base_pred)
                results.append(
                    {
                        "doc_id": doc_id,
                        "dimension": dim.value,
                        "target": target_name,
                        "horizon_years": horizon,
                        "delta_bps": delta,
                    }
                )
        for dim in NarrativeDimension:
            vals = [r["delta_bps"] for r in results if r["target"] == target_name and r["dimension"] == dim.value]
            if vals:
                summary[f"{task}:{dim.value}"] = float(np.mean(vals))
    store.record_output(manifest, "pte", store.write_jsonl("pte.jsonl", results))
    store.record_output(manifest, "pte_summary", store.write_json("pte_summary.json", summary))


def _marker_count_rater(system: str, text: str, params: GenerationParams) -> str:
    """Deterministic factor rater: rating grows with the marker density of
    the dimension named in the instruction."""
    for dim, marker in MARKER_TOKENS.items():
        if dim.value in system:
            count = text.split().count(marker)
            return str(1 + min(9, count))
    return "5"


def stage_factors(store: RunStore, manifest, cfg: dict) -> None:
    horizon = int(cfg["train"]["horizon"])
    docs = [masked_document_from_record(r) for r in store.read_jsonl("masked_docs.jsonl")]
    params = GenerationParams()
    scores = {d.doc_id: score_factors(d, _marker_count_rater, params) for d in docs}
    records = [
        {"doc_id": doc_id, "scores": {k.value: v for k, v in fs.scores.items()}, "n_chunks": fs.n_chunks}
        for doc_id, fs in sorted(scores.items())
    ]
    out = {}
    eval_data = store.read_json("eval.json") if (store.dir / "eval.json").exists() else {}
    for target_name in cfg["train"]["targets"]:
        task = _task_name(target_name, horizon)
        data = _load_features(store, task)
        keys = [k for k in data["row_keys"]]
        doc_ids = ["|".join(k.split("|")[:2]) for k in keys]
        fs_list = [scores[d] for d in doc_ids]
        fm, _names = factor_matrix(fs_list)
        full_r2 = None
        if task in eval_data:
            full_r2 = eval_data[task]["ST"]["r2_pct"] / 100.0
        out[task] = factor_model_fit(fm, data["y"], _hp(cfg), full_r2)
    store.record_output(manifest, "factor_scores", store.write_jsonl("factor_scores.jsonl", records))
    store.record_output(manifest, "factors", store.write_json("factor_eval.json", out))


TARGET_TITLES = {
    "ExpectedChange": "Expected Change in Earnings",
    "Disagreement": "Forecast Disagreement",
    "RealizedChange": "Realized Change in Earnings",
}


def stage_report(store: RunStore, manifest, cfg: dict) -> None:
    """Render the text tables and chart CSVs from stored run artifacts."""
    horizon = int(cfg["train"]["horizon"])
    h_label = f"{horizon}Y"
    eval_data = store.read_json("eval.json")
    cw_data = store.read_json("cw.json") if (store.dir / "cw.json").exists() else {}

    acc = {title: {h: (float("nan"), float("nan")) for h in reports.HORIZONS} for _, title in reports.TARGET_PANELS}
    nested = {title: {h: (float("nan"), float("nan")) for h in reports.HORIZONS} for _, title in reports.TARGET_PANELS}
    for target_name in cfg["train"]["targets"]:
        task = _task_name(target_name, horizon)
        title = TARGET_TITLES[target_name]
        if task in eval_data:
            acc[title][h_label] = (eval_data[task]["S"]["r2_pct"], eval_data[task]["ST"]["r2_pct"])
        if task in cw_data:
            nested[title][h_label] = (cw_data[task]["mse_reduction_pct"], cw_data[task]["t_stat"])
    text = "Predictive accuracy (computed)\n\n" + reports.render_accuracy_table(acc)
    text += "\nNested comparison (computed)\n\n" + reports.render_nested_test_table(nested)
    if (store.dir / "pte_summary.json").exists():
        summary = store.read_json("pte_summary.json")
        text += "\nAverage treatment effects by narrative (bps)\n"
        for key in sorted(summary):
            text += f"  {key}: {summary[key]:.2f}\n"
    store.record_output(manifest, "report", store.write_text("report.txt", text))


def stage_serve(store: RunStore, manifest, cfg: dict) -> None:
    import uvicorn

    from .service import create_app

    app = create_app(store.dir, cfg)
    uvicorn.run(app, host="127.0.0.1", port=int(cfg["serve"]["port"]))


# ---------------------------------------------------------------------------


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="narralab", description=__doc__)
    parser.add_argument("command", choices=STAGES)
    parser.add_argument("--run-id", default="default")
    parser.add_argument("--runs-root", default="runs")
    parser.add_argument("--config", default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--input", default=None, help="external transcript JSON-lines for ingest")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config, args.seed)
        store = RunStore(Path(args.runs_root), args.run_id)
        manifest = store.init_manifest(cfg)
        if args.command == "synth":
            stage_synth(store, manifest, cfg)
        elif args.command == "ingest":
            stage_ingest(store, manifest, cfg, args.input)
        elif args.command == "mask":
            stage_mask(store, manifest, cfg)
        elif args.command == "embed":
            stage_embed(store, manifest, cfg)
        elif args.command == "targets":
            stage_targets(store, manifest, cfg)
        elif args.command == "features":
            stage_features(store, manifest, cfg)
        elif args.command == "train":
            stage_train(store, manifest, cfg)
        elif args.command == "evaluate":
            stage_evaluate(store, manifest, cfg)
        elif args.command == "cw":
            stage_cw(store, manifest, cfg)
        elif args.command == "pdp":
            stage_pdp(store, manifest, cfg)
        elif args.command == "morph":
            stage_morph(store, manifest, cfg)
        elif args.command == "pte":
            stage_pte(store, manifest, cfg)
        elif args.command == "factors":
            stage_factors(store, manifest, cfg)
        elif args.command == "report":
            stage_report(store, manifest, cfg)
        elif args.command == "serve":
            stage_serve(store, manifest, cfg)
        return 0
    except FileNotFoundError as exc:
        print(f"error: missing stage output ({exc})", file=sys.stderr)
        return 1
    except (ValueError, KeyError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
