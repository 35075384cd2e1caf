"""Text-table and CSV rendering of run results.

Three fixed layouts: the predictive-accuracy comparison, the
analyst-benchmark gains table, and the nested-test panel; plus two
bar-chart-ready CSV datasets for the narrative treatment effects.  The
REFERENCE_* constants are illustrative display values used by the layout
golden tests and the demo scripts; they are not reproduction targets.
"""

from __future__ import annotations

from typing import Dict, List, Mapping, Tuple

TARGET_PANELS: List[Tuple[str, str]] = [
    ("i", "Expected Change in Earnings"),
    ("ii", "Forecast Disagreement"),
    ("iii", "Realized Change in Earnings"),
]

HORIZONS = ("1Y", "2Y", "3Y")

DIMENSION_ORDER = ["Guidance", "Jargon", "Confidence", "GlobalFocus", "Sentiment", "Uncertainty"]


def render_accuracy_table(values: Mapping[str, Mapping[str, Tuple[float, float]]]) -> str:
    """values[target_title][horizon] = (r2_fundamentals_pct, r2_with_text_pct).

    Gain (%) is the relative improvement of the augmented specification.
    """
    lines: List[str] = []
    for tag, title in TARGET_PANELS:
        lines.append(f"({tag}) {title}")
        lines.append("Horizon | R-squared (Fundamentals) | R-squared (Fundamentals + Text) | Gain (%)")
        lines.append("-" * 88)
        for h in HORIZONS:
            base, aug = values[title][h]
            gain = 100.0 * (aug - base) / base
            lines.append(f"{h}      | {base:24.2f} | {aug:31.2f} | {gain:8.2f}")
        lines.append("")
    return "\n".join(lines).rstrip("\n") + "\n"


def render_analyst_benchmark_table(values: Mapping[str, Mapping[str, float]]) -> str:
    """values[horizon] = {mse_forecast, fundamentals_gain_pct, total_gain_pct}."""
    lines = [
        "Horizon                 | " + " | ".join(f"{h:>8}" for h in HORIZONS),
        "-" * 60,
        "MSE (Forecast)          | "
        + " | ".join(f"{values[h]['mse_forecast']:8.6f}" for h in HORIZONS),
        "Fundamentals Gain (%)   | "
        + " | ".join(f"{values[h]['fundamentals_gain_pct']:8.2f}" for h in HORIZONS),
        "Total Gain (%)          | "
        + " | ".join(f"{values[h]['total_gain_pct']:8.2f}" for h in HORIZONS),
    ]
    return "\n".join(lines) + "\n"


def render_nested_test_table(values: Mapping[str, Mapping[str, Tuple[float, float]]]) -> str:
    """values[target_title][horizon] = (mse_reduction_pct, t_stat).

    Reductions print with one decimal, t-stats with two.
    """
    lines: List[str] = []
    for tag, title in TARGET_PANELS:
        lines.append(f"({tag}) {title}")
        lines.append("Horizon | MSE Reduction due to Text (%) | C&W t-stat")
        lines.append("-" * 54)
        for h in HORIZONS:
            red, t = values[title][h]
            lines.append(f"{h}      | {red:29.1f} | {t:10.2f}")
        lines.append("")
    return "\n".join(lines).rstrip("\n") + "\n"


def render_pte_level_csv(
    values: Mapping[str, Tuple[float, float]], fundamental_news_bps: float
) -> str:
    """values[dimension] = (expected_change_bps, realized_change_bps).

    Columns: dimension, AEE and FRE treatment effects, and their gap; one
    trailing row carries the interquartile fundamental-news benchmark.
    """
    lines = ["dimension,expected_change_bps,realized_change_bps,difference_bps"]
    for dim in DIMENSION_ORDER:
        aee, fre = values[dim]
        lines.append(f"{dim},{aee:.2f},{fre:.2f},{aee - fre:.2f}")
    lines.append(f"FundamentalNews,{fundamental_news_bps:.2f},{fundamental_news_bps:.2f},0.00")
    return "\n".join(lines) + "\n"


def render_pte_disagreement_csv(
    values: Mapping[str, float], fundamental_news_bps: float
) -> str:
    lines = ["dimension,disagreement_bps"]
    for dim in DIMENSION_ORDER:
        lines.append(f"{dim},{values[dim]:.2f}")
    lines.append(f"FundamentalNews,{fundamental_news_bps:.2f}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Illustrative display values for the golden-layout tests and demos

REFERENCE_ACCURACY: Dict[str, Dict[str, Tuple[float, float]]] = {
    "Expected Change in Earnings": {"1Y": (68.45, 69.35), "2Y": (56.38, 57.07), "3Y": (49.43, 50.15)},
    "Forecast Disagreement": {"1Y": (57.91, 58.55), "2Y": (57.62, 59.12), "3Y": (51.19, 52.74)},
    "Realized Change in Earnings": {"1Y": (54.59, 55.81), "2Y": (38.02, 38.80), "3Y": (33.26, 35.35)},
}

REFERENCE_ANALYST_BENCHMARK: Dict[str, Dict[str, float]] = {
    "1Y": {"mse_forecast": 0.001116, "fundamentals_gain_pct": 5.75, "total_gain_pct": 8.38},
    "2Y": {"mse_forecast": 0.001784, "fundamentals_gain_pct": 26.42, "total_gain_pct": 27.50},
    "3Y": {"mse_forecast": 0.002042, "fundamentals_gain_pct": 29.59, "total_gain_pct": 31.64},
}

REFERENCE_NESTED_TEST: Dict[str, Dict[str, Tuple[float, float]]] = {
    "Expected Change in Earnings": {"1Y": (9.70, 11.67), "2Y": (12.13, 11.06), "3Y": (8.10, 7.32)},
    "Forecast Disagreement": {"1Y": (9.11, 10.50), "2Y": (10.82, 9.89), "3Y": (12.55, 7.64)},
    "Realized Change in Earnings": {"1Y": (6.97, 10.30), "2Y": (9.21, 11.52), "3Y": (8.93, 8.51)},
}

# (expected-change effect, realized-change effect) per narrative dimension;
# the Jargon pair is a neutral placeholder illustrating a dimension where
# attention looks well calibrated
REFERENCE_PTE_LEVELS: Dict[str, Tuple[float, float]] = {
    "Guidance": (10.84, 19.43),
    "Jargon": (5.00, 5.00),
    "Confidence": (6.09, 25.76),
    "GlobalFocus": (10.84, -19.43),
    "Sentiment": (34.88, 25.76),
    "Uncertainty": (-9.22, -41.09),
}

REFERENCE_PTE_DISAGREEMENT: Dict[str, float] = {
    "Guidance": 8.00,
    "Jargon": 4.00,
    "Confidence": 9.50,
    "GlobalFocus": 12.00,
    "Sentiment": 10.50,
    "Uncertainty": 28.00,
}

REFERENCE_FUNDAMENTAL_NEWS_BPS = 55.0
