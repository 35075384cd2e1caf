"""Deterministic synthetic world: transcripts salted with narrative-marker
vocabulary at planted intensities, forecasts and events engineered so the
derived target rows follow known linear functions of those intensities, and
a stub morpher whose embedding shift is analytically computable.

Every document keeps a constant token count, and intensity level L means L
copies of the dimension's marker word per paragraph, so under the hashing
embedder the morphed version of a level-L document is bitwise the level-(L+1)
document.  That makes the planted treatment effect of a morph exactly the
per-level loading.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .morph import GenerationParams, NarrativeDimension, TextGenerator

FILLER_TOKEN = "broadly"
MAX_INTENSITY = 9  # levels 0..9 markers per paragraph
N_PARAGRAPHS = 1  # one prepared-remarks paragraph: a morph then moves the
# document exactly one intensity level up under the hashing embedder
SUE_SCALE = 0.01  # sue_effect_bps applies per 1% earnings surprise

MARKER_TOKENS: Dict[NarrativeDimension, str] = {
    NarrativeDimension.GUIDANCE: "roadmap",
    NarrativeDimension.JARGON: "synergies",
    NarrativeDimension.CONFIDENCE: "decisively",
    NarrativeDimension.GLOBAL_FOCUS: "macroeconomic",
    NarrativeDimension.SENTIMENT: "outstanding",
    NarrativeDimension.UNCERTAINTY: "headwinds",
}

_PREAMBLE = (
    "our teams delivered consistent execution across the portfolio this period "
    "and we remain focused on disciplined operations serving customers well"
)

DEFAULT_LOADINGS: Dict[NarrativeDimension, float] = {
    NarrativeDimension.GUIDANCE: 20.0,
    NarrativeDimension.JARGON: 20.0,
    NarrativeDimension.CONFIDENCE: 25.0,
    NarrativeDimension.GLOBAL_FOCUS: -25.0,
    NarrativeDimension.SENTIMENT: 30.0,
    NarrativeDimension.UNCERTAINTY: -40.0,
}


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 7
    n_firms: int = 100
    n_events: int = 600
    narrative_loadings: Dict[NarrativeDimension, float] = field(
        default_factory=lambda: dict(DEFAULT_LOADINGS)
    )
    noise_sd_bps: float = 20.0
    sue_effect_bps: float = 50.0

    def __post_init__(self):
        if self.n_events < 50:
            raise ValueError("n_events must be >= 50")
        if self.n_firms < 1:
            raise ValueError("n_firms must be >= 1")
        if self.noise_sd_bps < 0:
            raise ValueError("noise_sd_bps must be non-negative")
        missing = set(NarrativeDimension) - set(self.narrative_loadings)
        if missing:
            raise ValueError(f"loadings missing for {sorted(d.value for d in missing)}")


@dataclass(frozen=True)
class GroundTruth:
    """Planted coefficients and draws; enough to recompute every target exactly."""

    config_seed: int
    loadings: Dict[str, float]
    sue_effect_bps: float
    base_ec_bps: float
    base_rc_bps: float
    base_disagreement_bps: float
    events: List[dict]  # per event: doc_id, intensities, sue, noises, targets


def _paragraph_tokens(
    intensities: Dict[NarrativeDimension, int], numerals: Sequence[str]
) -> List[str]:
    tokens = _PREAMBLE.split()
    tokens += ["revenue", "was", numerals[0], "million", "up", numerals[1], "versus", numerals[2]]
    slot_total = 6 * MAX_INTENSITY + 1
    used = 0
    for dim in NarrativeDimension:
        count = intensities[dim]
        tokens += [MARKER_TOKENS[dim]] * count
        used += count
    tokens += [FILLER_TOKEN] * (slot_total - used)
    return tokens


def generate_corpus(
    cfg: SynthConfig,
) -> Tuple[List[dict], List[dict], List[dict], List[dict], GroundTruth]:
    """Emit (transcripts, forecasts, events, fundamentals, ground_truth).

    Transcripts, forecasts and fundamentals use the same JSON-lines record
    schemas the ingestion modules consume.  Two editorial versions per event
    exercise version selection; numerals vary per event and are removed by
    masking, so embeddings depend on marker intensities alone.
    """
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    start = dt.date(2012, 1, 2)

    transcripts: List[dict] = []
    forecasts: List[dict] = []
    fundamentals: List[dict] = []
    gt_events: List[dict] = []

    base_ec, base_rc, base_dis = 150.0, 100.0, 80.0
    price = 100.0
    eps_prev = 5.0

    for e in range(cfg.n_events):
        firm_id = f"F{e % cfg.n_firms:04d}"
        # same-firm events a year apart so the 15-day post-call and 90-day
        # pre-call windows of consecutive events never overlap
        call_date = start + dt.timedelta(days=365 * (e // cfg.n_firms) + (e % cfg.n_firms) * 3)
        doc_id = f"{firm_id}|{call_date.isoformat()}"

        intensities = {dim: int(rng.integers(0, MAX_INTENSITY + 1)) for dim in NarrativeDimension}
        sue = float(rng.uniform(-0.02, 0.02))
        text_term = sum(
            cfg.narrative_loadings[dim] * intensities[dim] for dim in NarrativeDimension
        )
        sue_term = cfg.sue_effect_bps * (sue / SUE_SCALE)

        noise = rng.normal(0.0, cfg.noise_sd_bps, size=9) if cfg.noise_sd_bps > 0 else np.zeros(9)
        targets: Dict[str, Dict[int, float]] = {"ec": {}, "rc": {}, "dis": {}}
        for hi, h in enumerate((1, 2, 3)):
            targets["ec"][h] = base_ec + text_term + sue_term + float(noise[hi])
            targets["rc"][h] = base_rc + text_term + sue_term + float(noise[3 + hi])
            targets["dis"][h] = max(
                5.0,
                base_dis
                + 0.3 * sum(abs(cfg.narrative_loadings[d]) * intensities[d] for d in NarrativeDimension)
                + float(noise[6 + hi]),
            )

        # transcript: operator intro, management paragraphs, analyst Q&A;
        # a preliminary version with truncated remarks is superseded
        numerals = [
            f"${rng.integers(1, 99)}.{rng.integers(0, 9)}",
            f"{rng.integers(1, 40)}%",
            f"Q{rng.integers(1, 5)}",
        ]
        paragraphs = [" ".join(_paragraph_tokens(intensities, numerals)) for _ in range(N_PARAGRAPHS)]
        segments = [{"speaker_role": "Operator", "order_index": 0, "text": "welcome to the call"}]
        segments += [
            {"speaker_role": "Management", "order_index": 1 + i, "text": p}
            for i, p in enumerate(paragraphs)
        ]
        segments.append(
            {
                "speaker_role": "Analyst",
                "order_index": 1 + len(paragraphs),
                "text": "thanks a question on margins",
            }
        )
        base_record = {
            "event_id": f"E{e:05d}",
            "firm_id": firm_id,
            "call_date": call_date.isoformat(),
            "segments": segments,
        }
        preliminary_segments = [
            segments[0],
            {
                "speaker_role": "Management",
                "order_index": 1,
                "text": "preliminary remarks pending editorial review of the call",
            },
            {**segments[-1], "order_index": 2},
        ]
        transcripts.append(
            {
                **base_record,
                "editorial_stage": "Preliminary",
                "version_timestamp": f"{call_date.isoformat()}T10:00:00Z",
                "segments": preliminary_segments,
            }
        )
        transcripts.append(
            {
                **base_record,
                "editorial_stage": "Audited",
                "version_timestamp": f"{call_date.isoformat()}T18:00:00Z",
            }
        )

        # post-call forecasts: three analysts, median pinned to the planted
        # expected change, spread pinned to the planted disagreement
        for h in (1, 2, 3):
            consensus_eps = eps_prev + targets["ec"][h] * price / 1e4
            delta = targets["dis"][h] * price / 1e4
            for a, eps in enumerate((consensus_eps - delta, consensus_eps, consensus_eps + delta)):
                forecasts.append(
                    {
                        "analyst_id": f"A{a}",
                        "broker_id": f"B{a}",
                        "firm_id": firm_id,
                        "issue_date": (call_date + dt.timedelta(days=2 + a)).isoformat(),
                        "horizon_years": h,
                        "eps_forecast": eps,
                        "adjustment_factor": 1.0,
                    }
                )
        # pre-call estimates pin SUE: median m with (eps_prev - m) / price = sue
        m = eps_prev - sue * price
        forecasts.append(
            {
                "analyst_id": "A9",
                "broker_id": "B9",
                "firm_id": firm_id,
                "issue_date": (call_date - dt.timedelta(days=30)).isoformat(),
                "horizon_years": 1,
                "eps_forecast": m,
                "adjustment_factor": 1.0,
            }
        )

        fundamentals.append(
            {
                "firm_id": firm_id,
                "as_of_date": (call_date - dt.timedelta(days=20)).isoformat(),
                "values": {
                    "char_momentum": float(rng.uniform(-0.5, 0.5)),
                    "char_size": float(rng.uniform(-0.5, 0.5)),
                    "char_value": float(rng.uniform(-0.5, 0.5)),
                    "announcement_return": float(rng.uniform(-0.05, 0.05)),
                },
            }
        )

        gt_events.append(
            {
                "doc_id": doc_id,
                "firm_id": firm_id,
                "call_date": call_date.isoformat(),
                "intensities": {d.value: intensities[d] for d in NarrativeDimension},
                "sue": sue,
                "noise": [float(x) for x in noise],
                "targets": {k: {str(h): v for h, v in targets[k].items()} for k in targets},
                "price_at_call": price,
                "realized_eps_prev": eps_prev,
            }
        )

    # events file follows from the planted realized changes
    events: List[dict] = []
    for ge in gt_events:
        events.append(
            {
                "firm_id": ge["firm_id"],
                "call_date": ge["call_date"],
                "realized_eps_prev": eps_prev,
                "price_at_call": price,
                "realized_eps_future": {
                    str(h): eps_prev + ge["targets"]["rc"][str(h)] * price / 1e4 for h in (1, 2, 3)
                },
                "adjustment_factor_at_realization": 1.0,
            }
        )

    ground_truth = GroundTruth(
        config_seed=cfg.seed,
        loadings={d.value: cfg.narrative_loadings[d] for d in NarrativeDimension},
        sue_effect_bps=cfg.sue_effect_bps,
        base_ec_bps=base_ec,
        base_rc_bps=base_rc,
        base_disagreement_bps=base_dis,
        events=gt_events,
    )
    return transcripts, forecasts, events, fundamentals, ground_truth


def stub_generator_for(dim: NarrativeDimension) -> TextGenerator:
    """Deterministic morpher: swap one filler token per paragraph for the
    dimension's marker word (appending when no filler remains).

    Digit-bearing tokens are never touched, so the numeral check always
    passes, and on synthetic documents the embedding shift equals moving one
    intensity level up.
    """
    marker = MARKER_TOKENS[dim]

    def gen(system: str, paragraph: str, params: GenerationParams) -> str:
        tokens = paragraph.split()
        for i, tok in enumerate(tokens):
            if tok == FILLER_TOKEN:
                tokens[i] = marker
                return " ".join(tokens)
        return " ".join(tokens + [marker])

    return gen


def ground_truth_to_record(gt: GroundTruth) -> dict:
    return {
        "config_seed": gt.config_seed,
        "loadings": gt.loadings,
        "sue_effect_bps": gt.sue_effect_bps,
        "base_ec_bps": gt.base_ec_bps,
        "base_rc_bps": gt.base_rc_bps,
        "base_disagreement_bps": gt.base_disagreement_bps,
        "events": gt.events,
    }
