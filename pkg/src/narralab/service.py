"""HTTP facade over a run directory.

POST /whatif morphs submitted text along requested narrative dimensions and
prices each accepted morph against the trained text-augmented models.  Run
inspection endpoints expose manifests and rendered reports.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from . import gbm
from .corpus import MaskedDocument, TextChunk, mask_numerals
from .embed import EmbeddingProvider, embed_document, hashing_embedder
from .features import EMB_PREFIX
from .morph import (
    GenerationParams,
    NarrativeDimension,
    TextGenerator,
    always_yes_judge,
    split_paragraphs,
    validate_and_retry,
)
from .synth import stub_generator_for


class WhatIfRequest(BaseModel):
    text: str
    dimensions: List[str]
    horizon: int = 1
    fundamentals_row_ref: Optional[str] = None


class _Task:
    def __init__(self, name: str, target: str, data, model_st) -> None:
        self.name = name
        self.target = target
        self.names = list(data["st_names"])
        self.emb_cols = [i for i, n in enumerate(self.names) if n.startswith(EMB_PREFIX)]
        self.values = data["st_values"]
        self.row_keys = [str(k) for k in data["row_keys"]]
        self.model = model_st


def _load_tasks(run_dir: Path, cfg: dict) -> Dict[str, _Task]:
    horizon = int(cfg["train"]["horizon"])
    tasks = {}
    for target_name in cfg["train"]["targets"]:
        task = f"{target_name}_{horizon}Y"
        feat = run_dir / f"features_{task}.npz"
        model = run_dir / f"model_ST_{task}.json"
        if not feat.exists() or not model.exists():
            continue
        data = np.load(feat, allow_pickle=False)
        tasks[task] = _Task(task, target_name, data, gbm.model_from_json(model.read_text()))
    return tasks


def create_app(
    run_dir: Path,
    cfg: dict,
    generators: Optional[Dict[NarrativeDimension, TextGenerator]] = None,
    provider: Optional[EmbeddingProvider] = None,
) -> FastAPI:
    runs_root = run_dir.parent
    app = FastAPI(title="narralab")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    if provider is None:
        provider = hashing_embedder(seed=int(cfg["seed"]), dim=int(cfg["embed"]["dim"]))
    if generators is None:
        generators = {dim: stub_generator_for(dim) for dim in NarrativeDimension}
    tasks = _load_tasks(run_dir, cfg)
    mask_cfg = cfg["mask"]
    params = GenerationParams()
    max_attempts = int(cfg["morph"]["max_attempts"])

    def _baseline_row(task: _Task, ref: Optional[str]) -> np.ndarray:
        if ref is None:
            # median fundamentals profile when no reference row is named
            with np.errstate(all="ignore"):
                return np.nanmedian(task.values, axis=0)
        for key, row in zip(task.row_keys, task.values):
            if key == ref or key.rsplit("|", 1)[0] == ref:
                return row.copy()
        raise HTTPException(status_code=400, detail=f"unknown fundamentals_row_ref: {ref}")

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok", "tasks": sorted(tasks)}

    @app.get("/runs")
    def list_runs() -> list:
        out = []
        for mf in sorted(runs_root.glob("*/manifest.json")):
            rec = json.loads(mf.read_text())
            out.append(
                {
                    "run_id": rec["run_id"],
                    "created_at": rec["created_at"],
                    "completed": rec["completed"],
                    "stages": sorted(rec["stage_outputs"]),
                }
            )
        return out

    @app.get("/runs/{run_id}/report")
    def run_report(run_id: str) -> dict:
        report = runs_root / run_id / "report.txt"
        if not report.exists():
            raise HTTPException(status_code=404, detail=f"no report for run {run_id}")
        return {"run_id": run_id, "report": report.read_text()}

    @app.post("/whatif")
    def whatif(req: WhatIfRequest) -> dict:
        if not req.text.strip():
            raise HTTPException(status_code=400, detail="text must be non-empty")
        if not tasks:
            raise HTTPException(status_code=409, detail="no trained model in run directory")
        try:
            dims = [NarrativeDimension.parse(d) for d in req.dimensions]
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        if not dims:
            raise HTTPException(status_code=400, detail="dimensions must be non-empty")

        paragraphs = split_paragraphs(req.text)
        masked_paras = [mask_numerals(p, mask_cfg["mask_token"])[0] for p in paragraphs]
        chunks = tuple(TextChunk(i, len(p.split()), p) for i, p in enumerate(masked_paras))
        doc = MaskedDocument(doc_id="whatif", call_date="1970-01-01", chunks=chunks, mask_count=0)
        base_emb = embed_document(doc, provider)

        results = []
        for dim in dims:
            try:
                res = validate_and_retry(
                    "whatif", masked_paras, dim, generators[dim], always_yes_judge,
                    params, max_attempts,
                )
            except RuntimeError as exc:
                raise HTTPException(status_code=502, detail=f"generator unavailable: {exc}")
            entry = {
                "dimension": dim.value,
                "morphed_text": res.morphed_text,
                "judge_verdict": res.judge_verdict.value,
                "accepted": res.accepted,
                "attempts": res.attempts,
                "pte": {},
            }
            if res.accepted:
                mparas = split_paragraphs(res.morphed_text)
                mdoc = MaskedDocument(
                    doc_id="whatif",
                    call_date="1970-01-01",
                    chunks=tuple(TextChunk(i, len(p.split()), p) for i, p in enumerate(mparas)),
                    mask_count=0,
                )
                memb = embed_document(mdoc, provider)
                for name, task in tasks.items():
                    row = _baseline_row(task, req.fundamentals_row_ref)
                    orig = row.copy()
                    orig[task.emb_cols] = base_emb.values
                    morphed = row.copy()
                    morphed[task.emb_cols] = memb.values
                    preds = gbm.predict(task.model, np.vstack([orig, morphed]))
                    entry["pte"][task.target] = float(preds[1] - preds[0])
            results.append(entry)
        return {"horizon": int(req.horizon), "results": results}

    return app
