"""Counterfactual rewrites of management remarks along six narrative
dimensions, paragraph by paragraph, validated by a generator-based judge and
a deterministic numeral-preservation check.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources
from typing import Callable, Counter as CounterT, Dict, List, Optional, Sequence

from collections import Counter

DEFAULT_MAX_ATTEMPTS = 3
PARAGRAPH_SEP = "\n\n"

_DIGIT_RE = re.compile(r"\d")


class NarrativeDimension(str, Enum):
    GUIDANCE = "Guidance"
    JARGON = "Jargon"
    CONFIDENCE = "Confidence"
    GLOBAL_FOCUS = "GlobalFocus"
    SENTIMENT = "Sentiment"
    UNCERTAINTY = "Uncertainty"

    @classmethod
    def parse(cls, name: str) -> "NarrativeDimension":
        for d in cls:
            if d.value.lower() == name.lower() or d.name.lower() == name.lower():
                return d
        raise ValueError(f"unknown narrative dimension: {name!r}")


class JudgeVerdict(str, Enum):
    YES = "Yes"
    NOT_SURE = "NotSure"
    NO = "No"


@dataclass(frozen=True)
class GenerationParams:
    temperature: float = 0.7
    top_p: float = 0.95
    max_tokens: int = 1024
    model_name: str = "stub"

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not (0.0 < self.top_p <= 1.0):
            raise ValueError("top_p must be in (0, 1]")


# capability contract: (system_prompt, user_text, params) -> generated text
TextGenerator = Callable[[str, str, GenerationParams], str]


@dataclass(frozen=True)
class MorphResult:
    doc_id: str
    dimension: NarrativeDimension
    morphed_text: str
    judge_verdict: JudgeVerdict
    numeral_check_passed: bool
    attempts: int
    accepted: bool

    def __post_init__(self):
        expect = self.judge_verdict == JudgeVerdict.YES and self.numeral_check_passed
        if self.accepted != expect:
            raise ValueError("accepted must equal (verdict Yes and numeral check passed)")


_PROMPT_FILES: Dict[NarrativeDimension, str] = {
    NarrativeDimension.CONFIDENCE: "confidence.txt",
    NarrativeDimension.GLOBAL_FOCUS: "global_focus.txt",
    NarrativeDimension.GUIDANCE: "guidance.txt",
    NarrativeDimension.SENTIMENT: "sentiment.txt",
    NarrativeDimension.JARGON: "jargon.txt",
    NarrativeDimension.UNCERTAINTY: "uncertainty.txt",
}


@lru_cache(maxsize=None)
def _read_prompt(filename: str) -> str:
    return resources.files("narralab.prompts").joinpath(filename).read_text(encoding="utf-8")


def morph_prompt(dim: NarrativeDimension) -> str:
    """Rewrite instruction shipped with the package for one dimension."""
    return _read_prompt(_PROMPT_FILES[dim]).rstrip("\n")


def judge_template() -> str:
    """Validation template with [original excerpt] / [morphed excerpt] slots."""
    return _read_prompt("judge.txt").rstrip("\n")


def prompt_registry() -> Dict[str, str]:
    reg = {dim.value: morph_prompt(dim) for dim in NarrativeDimension}
    reg["Judge"] = judge_template()
    return reg


def split_paragraphs(text: str) -> List[str]:
    paragraphs = [p.strip() for p in re.split(r"\n\s*\n", text) if p.strip()]
    return paragraphs


def morph_document(
    doc_paragraphs: Sequence[str],
    dim: NarrativeDimension,
    gen: TextGenerator,
    params: GenerationParams = GenerationParams(),
) -> str:
    """Rewrite each paragraph with the dimension's instruction, in order,
    joining outputs with blank lines.  Paragraph count is preserved by
    construction."""
    if not doc_paragraphs:
        raise ValueError("no paragraphs")
    system = morph_prompt(dim)
    out: List[str] = []
    for i, para in enumerate(doc_paragraphs):
        try:
            morphed = gen(system, para, params)
        except Exception as exc:
            raise RuntimeError(f"generator failed on paragraph {i}: {exc}") from exc
        if not morphed or not morphed.strip():
            raise RuntimeError(f"empty generation for paragraph {i}")
        out.append(morphed.strip())
    return PARAGRAPH_SEP.join(out)


def _digit_token_multiset(text: str) -> CounterT[str]:
    tokens = []
    for raw in text.split():
        if _DIGIT_RE.search(raw):
            tokens.append(raw.strip(".,;:!?()[]{}\"'").lower())
    return Counter(tokens)


def numeral_preservation_check(original: str, morphed: str) -> bool:
    """True iff both texts carry the same multiset of digit-bearing tokens
    (punctuation-stripped, lowercased)."""
    return _digit_token_multiset(original) == _digit_token_multiset(morphed)


_VERDICT_PATTERNS = [
    (re.compile(r"^\s*(1\b|1\.|yes\b)", re.IGNORECASE), JudgeVerdict.YES),
    (re.compile(r"^\s*(2\b|2\.|not\s+sure\b)", re.IGNORECASE), JudgeVerdict.NOT_SURE),
    (re.compile(r"^\s*(3\b|3\.|no\b)", re.IGNORECASE), JudgeVerdict.NO),
]


def _parse_verdict(reply: str) -> Optional[JudgeVerdict]:
    for pattern, verdict in _VERDICT_PATTERNS:
        if pattern.search(reply):
            return verdict
    return None


def judge(
    original: str,
    morphed: str,
    gen: TextGenerator,
    params: GenerationParams = GenerationParams(),
    excerpt_chars: Optional[int] = None,
) -> JudgeVerdict:
    """Fill the judge template and classify the reply, zero-shot.

    The reply is matched on its option prefix ("1"/"Yes", "2"/"Not sure",
    "3"/"No"); an unparseable reply is re-asked once, then falls back to
    NotSure.
    """
    if not original or not morphed:
        raise ValueError("both texts must be nonempty")
    a, b = original, morphed
    if excerpt_chars is not None:
        a, b = a[:excerpt_chars], b[:excerpt_chars]
    prompt = judge_template().replace("[original excerpt]", a).replace("[morphed excerpt]", b)
    for _ in range(2):  # one re-ask on parse failure
        reply = gen("", prompt, params)
        verdict = _parse_verdict(reply)
        if verdict is not None:
            return verdict
    return JudgeVerdict.NOT_SURE


def validate_and_retry(
    doc_id: str,
    doc_paragraphs: Sequence[str],
    dim: NarrativeDimension,
    gen: TextGenerator,
    judge_gen: TextGenerator,
    params: GenerationParams = GenerationParams(),
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
) -> MorphResult:
    """morph -> numeral check -> judge, regenerating on any failure.

    Only a Yes verdict together with a passing numeral check is accepted;
    NotSure is rejected just like No.  After max_attempts failures the last
    attempt is returned with accepted = False.
    """
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    original = PARAGRAPH_SEP.join(doc_paragraphs)
    morphed, verdict, check = "", JudgeVerdict.NO, False
    for attempt in range(1, max_attempts + 1):
        morphed = morph_document(doc_paragraphs, dim, gen, params)
        check = numeral_preservation_check(original, morphed)
        verdict = judge(original, morphed, judge_gen, params)
        if verdict == JudgeVerdict.YES and check:
            return MorphResult(
                doc_id=doc_id,
                dimension=dim,
                morphed_text=morphed,
                judge_verdict=verdict,
                numeral_check_passed=check,
                attempts=attempt,
                accepted=True,
            )
    return MorphResult(
        doc_id=doc_id,
        dimension=dim,
        morphed_text=morphed,
        judge_verdict=verdict,
        numeral_check_passed=check,
        attempts=max_attempts,
        accepted=False,
    )


def morph_result_to_record(res: MorphResult) -> dict:
    return {
        "doc_id": res.doc_id,
        "dimension": res.dimension.value,
        "morphed_text": res.morphed_text,
        "judge_verdict": res.judge_verdict.value,
        "numeral_check_passed": res.numeral_check_passed,
        "attempts": res.attempts,
        "accepted": res.accepted,
    }


def morph_result_from_record(rec: dict) -> MorphResult:
    return MorphResult(
        doc_id=str(rec["doc_id"]),
        dimension=NarrativeDimension.parse(rec["dimension"]),
        morphed_text=rec["morphed_text"],
        judge_verdict=JudgeVerdict(rec["judge_verdict"]),
        numeral_check_passed=bool(rec["numeral_check_passed"]),
        attempts=int(rec["attempts"]),
        accepted=bool(rec["accepted"]),
    )


def identity_generator(system: str, text: str, params: GenerationParams) -> str:
    """Trivial generator: returns the input unchanged."""
    return text


def scripted_judge(replies: Sequence[str]) -> TextGenerator:
    """Generator replaying a fixed sequence of replies (last one repeats)."""
    state = {"i": 0}

    def gen(system: str, text: str, params: GenerationParams) -> str:
        i = min(state["i"], len(replies) - 1)
        state["i"] += 1
        return replies[i]

    return gen


def always_yes_judge(system: str, text: str, params: GenerationParams) -> str:
    return "1. Yes: the morphing was executed correctly and the language modification is clear and evident"
