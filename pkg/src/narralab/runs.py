"""Run directories: JSON-lines persistence and a hash-stamped manifest.

Each pipeline invocation works under runs/<run_id>/; the manifest records
every stage output with its content hash and the seeds in effect, and is
frozen once a run is marked complete.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional

MANIFEST_NAME = "manifest.json"


@dataclass
class RunManifest:
    run_id: str
    created_at: str
    config_hash: str
    stage_outputs: Dict[str, str] = field(default_factory=dict)
    output_hashes: Dict[str, str] = field(default_factory=dict)
    seeds: Dict[str, int] = field(default_factory=dict)
    completed: bool = False


def file_sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def config_hash(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True).encode("utf-8")).hexdigest()


class RunStore:
    def __init__(self, root: Path, run_id: str):
        self.run_id = run_id
        self.dir = Path(root) / run_id
        self.dir.mkdir(parents=True, exist_ok=True)

    @property
    def manifest_path(self) -> Path:
        return self.dir / MANIFEST_NAME

    def load_manifest(self) -> Optional[RunManifest]:
        if not self.manifest_path.exists():
            return None
        data = json.loads(self.manifest_path.read_text())
        return RunManifest(**data)

    def init_manifest(self, config: dict) -> RunManifest:
        existing = self.load_manifest()
        if existing is not None:
            if existing.completed:
                raise PermissionError(f"run {self.run_id} is complete and immutable")
            return existing
        manifest = RunManifest(
            run_id=self.run_id,
            created_at=dt.datetime.now(dt.timezone.utc).isoformat(),
            config_hash=config_hash(config),
        )
        self._save(manifest)
        return manifest

    def _save(self, manifest: RunManifest) -> None:
        self.manifest_path.write_text(json.dumps(manifest.__dict__, indent=2, sort_keys=True))

    def record_output(self, manifest: RunManifest, stage: str, path: Path, seed: Optional[int] = None) -> None:
        if manifest.completed:
            raise PermissionError(f"run {self.run_id} is complete and immutable")
        manifest.stage_outputs[stage] = path.name
        manifest.output_hashes[stage] = file_sha256(path)
        if seed is not None:
            manifest.seeds[stage] = seed
        self._save(manifest)

    def complete(self, manifest: RunManifest) -> None:
        manifest.completed = True
        self._save(manifest)

    def stage_path(self, stage: str) -> Path:
        manifest = self.load_manifest()
        if manifest is None or stage not in manifest.stage_outputs:
            raise FileNotFoundError(f"missing stage output: {stage}")
        return self.dir / manifest.stage_outputs[stage]

    # -- plain file helpers ------------------------------------------------

    def write_jsonl(self, name: str, records: Iterable[dict]) -> Path:
        path = self.dir / name
        with open(path, "w", encoding="utf-8") as f:
            for rec in records:
                f.write(json.dumps(rec, sort_keys=True))
                f.write("\n")
        return path

    def read_jsonl(self, name: str) -> List[dict]:
        path = self.dir / name
        with open(path, encoding="utf-8") as f:
            return [json.loads(line) for line in f if line.strip()]

    def write_json(self, name: str, payload) -> Path:
        path = self.dir / name
        path.write_text(json.dumps(payload, indent=2, sort_keys=True))
        return path

    def read_json(self, name: str):
        return json.loads((self.dir / name).read_text())

    def write_text(self, name: str, text: str) -> Path:
        path = self.dir / name
        path.write_text(text)
        return path
