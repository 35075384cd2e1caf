"""Transcript ingestion: version selection, speaker filtering, numeral masking, chunking.

Transcripts arrive as speaker-segmented call records, possibly in several
editorial versions per event.  This module reduces them to masked, chunked
documents ready for embedding.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, List, Sequence, Tuple

DEFAULT_MASK_TOKEN = "[MASK]"
DEFAULT_WINDOW_SIZE = 512

_DIGIT_RE = re.compile(r"\d")


class EditorialStage(IntEnum):
    """Editorial review stages, ordered from least to most refined."""

    PRELIMINARY = 0
    EDITED = 1
    PROOFING = 2
    AUDITED = 3

    @classmethod
    def parse(cls, name: str) -> "EditorialStage":
        try:
            return cls[name.upper()]
        except KeyError:
            raise ValueError(f"unknown editorial stage: {name!r}") from None


class SpeakerRole(IntEnum):
    MANAGEMENT = 0
    ANALYST = 1
    OPERATOR = 2

    @classmethod
    def parse(cls, name: str) -> "SpeakerRole":
        try:
            return cls[name.upper()]
        except KeyError:
            raise ValueError(f"unknown speaker role: {name!r}") from None


@dataclass(frozen=True)
class SpeakerSegment:
    speaker_role: SpeakerRole
    order_index: int
    text: str

    def __post_init__(self):
        if self.order_index < 0:
            raise ValueError("order_index must be non-negative")
        if not self.text:
            raise ValueError("segment text must be nonempty")


@dataclass(frozen=True)
class TranscriptVersion:
    event_id: str
    firm_id: str
    editorial_stage: EditorialStage
    version_timestamp: str  # ISO-8601 UTC; lexicographic order == temporal order
    segments: Tuple[SpeakerSegment, ...]

    def __post_init__(self):
        if not self.segments:
            raise ValueError("segments must be nonempty")
        indices = [s.order_index for s in self.segments]
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise ValueError("order_index must be strictly increasing")


@dataclass(frozen=True)
class TextChunk:
    chunk_index: int
    token_count: int
    text: str


@dataclass(frozen=True)
class MaskedDocument:
    doc_id: str
    call_date: str
    chunks: Tuple[TextChunk, ...]
    mask_count: int

    def __post_init__(self) -> None:
        if not self.chunks:
            raise ValueError("masked document needs at least one chunk")
        if self.mask_count < 0:
            raise ValueError("mask_count must be non-negative")
        if any(_DIGIT_RE.search(c.text) for c in self.chunks):
            raise ValueError("masked document must not contain digits")


def select_latest_transcript(versions: Sequence[TranscriptVersion]) -> TranscriptVersion:
    """Pick the most refined version; within a stage, the latest timestamp.

    The result is stable under permutation of the input.
    """
    if not versions:
        raise ValueError("no versions")
    keys = {(v.event_id, v.firm_id) for v in versions}
    if len(keys) > 1:
        raise ValueError(f"versions span multiple events: {sorted(keys)}")
    return max(versions, key=lambda v: (int(v.editorial_stage), v.version_timestamp))


def extract_management_remarks(t: TranscriptVersion) -> str:
    """Concatenate management segments preceding the first analyst turn.

    Management answers during Q&A are deliberately excluded: prepared remarks
    end where the first analyst speaks.
    """
    parts: List[str] = []
    for seg in t.segments:
        if seg.speaker_role == SpeakerRole.ANALYST:
            break
        if seg.speaker_role == SpeakerRole.MANAGEMENT:
            parts.append(seg.text)
    if not parts:
        raise ValueError("empty management remarks")
    return " ".join(parts)


def mask_numerals(s: str, mask_token: str = DEFAULT_MASK_TOKEN) -> Tuple[str, int]:
    """Replace every whitespace token containing a digit with ``mask_token``.

    Covers currency amounts, percentages, dates, quarter/year markers and
    ticker-like digit strings; spelled-out numbers are left alone.  The
    returned count is the number of tokens replaced.  Idempotent as long as
    ``mask_token`` itself carries no digit.
    """
    if not mask_token:
        raise ValueError("mask_token must be nonempty")
    if _DIGIT_RE.search(mask_token):
        raise ValueError("mask_token must not contain digits")
    out: List[str] = []
    count = 0
    # split keeping the whitespace runs so the original spacing survives
    for piece in re.split(r"(\s+)", s):
        if piece and not piece.isspace() and _DIGIT_RE.search(piece):
            # sentence punctuation and brackets hugging the token survive;
            # signs, currency and percent marks are part of the numeral
            core, lead, trail = piece, "", ""
            while core and core[0] in "([{\"'":
                lead += core[0]
                core = core[1:]
            while core and core[-1] in ")]}\"',.;:!?":
                trail = core[-1] + trail
                core = core[:-1]
            if _DIGIT_RE.search(core):
                out.append(lead + mask_token + trail)
                count += 1
            else:
                out.append(piece)
        else:
            out.append(piece)
    return "".join(out), count


def chunk_text(s: str, window_size: int = DEFAULT_WINDOW_SIZE) -> List[TextChunk]:
    """Partition whitespace tokens into consecutive runs of ``window_size``.

    Every chunk except possibly the last holds exactly ``window_size`` tokens;
    chunks are re-joined with single spaces.
    """
    if window_size < 1:
        raise ValueError("window_size must be >= 1")
    tokens = s.split()
    if not tokens:
        raise ValueError("empty text")
    chunks = []
    for i, start in enumerate(range(0, len(tokens), window_size)):
        run = tokens[start : start + window_size]
        chunks.append(TextChunk(chunk_index=i, token_count=len(run), text=" ".join(run)))
    return chunks


def build_masked_document(
    doc_id: str,
    call_date: str,
    versions: Sequence[TranscriptVersion],
    mask_token: str = DEFAULT_MASK_TOKEN,
    window_size: int = DEFAULT_WINDOW_SIZE,
) -> MaskedDocument:
    """Full per-event path: version selection -> remarks -> masking -> chunking."""
    latest = select_latest_transcript(versions)
    remarks = extract_management_remarks(latest)
    masked, n_masked = mask_numerals(remarks, mask_token)
    chunks = chunk_text(masked, window_size)
    return MaskedDocument(doc_id=doc_id, call_date=call_date, chunks=tuple(chunks), mask_count=n_masked)


# ---------------------------------------------------------------------------
# JSON-lines wire format


def transcript_from_record(rec: dict) -> TranscriptVersion:
    segments = tuple(
        SpeakerSegment(
            speaker_role=SpeakerRole.parse(s["speaker_role"]),
            order_index=int(s["order_index"]),
            text=s["text"],
        )
        for s in rec["segments"]
    )
    return TranscriptVersion(
        event_id=str(rec["event_id"]),
        firm_id=str(rec["firm_id"]),
        editorial_stage=EditorialStage.parse(rec["editorial_stage"]),
        version_timestamp=str(rec["version_timestamp"]),
        segments=segments,
    )


def masked_document_to_record(doc: MaskedDocument) -> dict:
    return {
        "doc_id": doc.doc_id,
        "call_date": doc.call_date,
        "mask_count": doc.mask_count,
        "chunks": [
            {"chunk_index": c.chunk_index, "token_count": c.token_count, "text": c.text}
            for c in doc.chunks
        ],
    }


def masked_document_from_record(rec: dict) -> MaskedDocument:
    return MaskedDocument(
        doc_id=str(rec["doc_id"]),
        call_date=str(rec["call_date"]),
        mask_count=int(rec["mask_count"]),
        chunks=tuple(
            TextChunk(int(c["chunk_index"]), int(c["token_count"]), c["text"])
            for c in rec["chunks"]
        ),
    )


def ingest_transcripts(records: Iterable[dict]) -> List[TranscriptVersion]:
    """Parse raw records, dropping any flagged as linked to multiple companies."""
    out = []
    for rec in records:
        if rec.get("multi_company", False):
            continue
        out.append(transcript_from_record(rec))
    return out
