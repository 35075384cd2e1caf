"""Document embeddings: pluggable chunk encoders pooled into one vector per call.

The offline default is a seeded hashing encoder (bag-of-tokens mean of
pseudo-random token vectors), which makes every downstream quantity exactly
recomputable without model weights.  Users holding encoder access can point
the remote provider at an HTTP endpoint instead.
"""

from __future__ import annotations

import hashlib
import json
import os
import urllib.request
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List

import numpy as np

from .corpus import MaskedDocument

DEFAULT_DIM = 768
AUTH_ENV_VAR = "NARRALAB_EMBED_AUTH"


@dataclass(frozen=True)
class EmbeddingVector:
    doc_id: str
    dim: int
    values: np.ndarray  # float64, shape (dim,)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (self.dim,):
            raise ValueError(f"expected shape ({self.dim},), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("embedding values must be finite")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class EmbeddingProvider:
    """Capability contract: deterministic chunk-text -> fixed-dim vector."""

    name: str
    dim: int
    embed_chunk: Callable[[str], np.ndarray]


def _token_vector(seed: int, token: str, dim: int) -> np.ndarray:
    # stable across processes: Python's builtin hash() is salted, blake2 is not
    digest = hashlib.blake2b(f"{seed}\x00{token}".encode("utf-8"), digest_size=8).digest()
    rng = np.random.Generator(np.random.PCG64(int.from_bytes(digest, "big")))
    return rng.uniform(-1.0, 1.0, size=dim)


def hashing_embedder(seed: int = 0, dim: int = DEFAULT_DIM) -> EmbeddingProvider:
    """Offline stand-in encoder: mean of seeded pseudo-random token vectors.

    Identical tokens always map to identical vectors, so a chunk embedding is
    a pure function of its token bag.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    cache: Dict[str, np.ndarray] = {}

    def embed_chunk(text: str) -> np.ndarray:
        tokens = text.split()
        if not tokens:
            return np.zeros(dim)
        acc = np.zeros(dim, dtype=np.float64)
        for t in tokens:
            vec = cache.get(t)
            if vec is None:
                vec = _token_vector(seed, t, dim)
                cache[t] = vec
            acc += vec
        return acc / len(tokens)

    return EmbeddingProvider(name=f"hashing-{seed}", dim=dim, embed_chunk=embed_chunk)


def remote_embedder(endpoint: str, model: str, dim: int = DEFAULT_DIM) -> EmbeddingProvider:
    """HTTP provider: POST {model, text} to ``endpoint``, expect {"values": [...]}.

    An auth header is read from the NARRALAB_EMBED_AUTH environment variable
    when set ("Header-Name: value").
    """

    def embed_chunk(text: str) -> np.ndarray:
        body = json.dumps({"model": model, "text": text}).encode("utf-8")
        req = urllib.request.Request(endpoint, data=body, headers={"Content-Type": "application/json"})
        auth = os.environ.get(AUTH_ENV_VAR)
        if auth and ":" in auth:
            name, value = auth.split(":", 1)
            req.add_header(name.strip(), value.strip())
        with urllib.request.urlopen(req) as resp:
            payload = json.loads(resp.read().decode("utf-8"))
        return np.asarray(payload["values"], dtype=np.float64)

    return EmbeddingProvider(name=f"remote-{model}", dim=dim, embed_chunk=embed_chunk)


def embed_document(doc: MaskedDocument, provider: EmbeddingProvider) -> EmbeddingVector:
    """Unweighted elementwise mean of the chunk vectors, in chunk-index order.

    Accumulation is float64 regardless of how vectors are stored on disk, so
    the pooled result does not depend on chunk count round-off.
    """
    if not doc.chunks:
        raise ValueError("document has no chunks")
    acc = np.zeros(provider.dim, dtype=np.float64)
    for chunk in sorted(doc.chunks, key=lambda c: c.chunk_index):
        try:
            vec = np.asarray(provider.embed_chunk(chunk.text), dtype=np.float64)
        except Exception as exc:
            raise RuntimeError(f"provider failed on chunk {chunk.chunk_index}: {exc}") from exc
        if vec.shape != (provider.dim,):
            raise ValueError(
                f"dim mismatch on chunk {chunk.chunk_index}: expected {provider.dim}, got {vec.shape}"
            )
        acc += vec
    return EmbeddingVector(doc_id=doc.doc_id, dim=provider.dim, values=acc / len(doc.chunks))


# ---------------------------------------------------------------------------
# JSON-lines store: values serialized as float32 for compactness


def embedding_to_record(emb: EmbeddingVector) -> dict:
    return {
        "doc_id": emb.doc_id,
        "dim": emb.dim,
        "values": [float(x) for x in emb.values.astype(np.float32)],
    }


def embedding_from_record(rec: dict) -> EmbeddingVector:
    return EmbeddingVector(
        doc_id=str(rec["doc_id"]),
        dim=int(rec["dim"]),
        values=np.asarray(rec["values"], dtype=np.float64),
    )


def embed_corpus(docs: Iterable[MaskedDocument], provider: EmbeddingProvider) -> List[EmbeddingVector]:
    return [embed_document(doc, provider) for doc in docs]
