// Views are pure string renderers so they can be exercised without a DOM.
// Every number shown comes straight from the API payload; formatting is the
// only client-side arithmetic.

import type { DimensionResult } from "./api.js";
import { diffSentences } from "./diff.js";

export const TARGET_ORDER = ["ExpectedChange", "RealizedChange", "Disagreement"];

// Fundamental-news benchmark line drawn across the bar group, in bps.
export const BENCHMARK_BPS = 55.0;

const BAR_FULL_SCALE_BPS = 100.0;

export function formatBps(value: number): string {
  return value.toFixed(2);
}

export function barWidthPct(value: number): number {
  const pct = (Math.abs(value) / BAR_FULL_SCALE_BPS) * 100;
  return Math.min(100, Math.round(pct * 10) / 10);
}

function escapeHtml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderVerdictBadge(verdict: string): string {
  const cls = verdict === "Yes" ? "yes" : verdict === "No" ? "no" : "notsure";
  return `<span class="badge badge-${cls}">${escapeHtml(verdict)}</span>`;
}

export function renderDiff(original: string, morphed: string): string {
  const spans = diffSentences(original, morphed)
    .map((s) => {
      const cls = s.changed ? "sentence changed" : "sentence";
      return `<span class="${cls}">${escapeHtml(s.text)}</span>`;
    })
    .join(" ");
  return `<p class="diff">${spans}</p>`;
}

export function renderPteBars(pte: Record<string, number>): string {
  const rows = TARGET_ORDER.filter((t) => t in pte)
    .map((target) => {
      const value = pte[target];
      const side = value < 0 ? "neg" : "pos";
      return (
        `<div class="bar-row" data-target="${target}">` +
        `<span class="bar-label">${target}</span>` +
        `<div class="bar ${side}" style="width:${barWidthPct(value)}%"></div>` +
        `<span class="bar-value">${formatBps(value)}</span>` +
        `</div>`
      );
    })
    .join("");
  const benchmark =
    `<div class="benchmark" style="left:${barWidthPct(BENCHMARK_BPS)}%"` +
    ` title="fundamental news benchmark ${formatBps(BENCHMARK_BPS)} bps"></div>`;
  return `<div class="bars">${rows}${benchmark}</div>`;
}

export function renderCard(draft: string, result: DimensionResult): string {
  const header =
    `<header><h3>${escapeHtml(result.dimension)}</h3>` +
    `${renderVerdictBadge(result.judge_verdict)}</header>`;
  const body = result.accepted
    ? renderDiff(draft, result.morphed_text) + renderPteBars(result.pte)
    : `<p class="rejected">Morph rejected after ${result.attempts} attempt(s); no effects to show.</p>`;
  return `<article class="card" data-dimension="${escapeHtml(result.dimension)}">${header}${body}</article>`;
}

export function renderCards(draft: string, results: DimensionResult[]): string {
  return results.map((r) => renderCard(draft, r)).join("");
}

export function renderErrorBanner(message: string): string {
  return `<div class="banner error">${escapeHtml(message)}</div>`;
}
