"""Narrative-morphing laboratory: masked earnings-call text, hashing
embeddings, gradient-boosted prediction of analyst-belief targets, and
counterfactual treatment effects of rewritten narratives."""

__version__ = "0.1.0"

__all__ = [
    "corpus",
    "embed",
    "targets",
    "features",
    "gbm",
    "stats",
    "morph",
    "pte",
    "synth",
    "pipeline",
    "reports",
    "runs",
]
