// Thin client for the lab-service HTTP API. The UI renders only what the
// server returns; there is no client-side recomputation of effects.

export interface WhatIfRequest {
  text: string;
  dimensions: string[];
  horizon: number;
  fundamentals_row_ref?: string | null;
}

export interface DimensionResult {
  dimension: string;
  morphed_text: string;
  judge_verdict: string;
  accepted: boolean;
  attempts: number;
  pte: Record<string, number>;
}

export interface WhatIfResponse {
  horizon: number;
  results: DimensionResult[];
}

export interface RunSummary {
  run_id: string;
  created_at: string;
  completed: boolean;
  stages: string[];
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
  }
}

async function requestJson<T>(url: string, init?: RequestInit): Promise<T> {
  let resp: Response;
  try {
    resp = await fetch(url, init);
  } catch (err) {
    throw new ApiError(0, `service unreachable: ${String(err)}`);
  }
  const body = await resp.json().catch(() => ({}));
  if (!resp.ok) {
    const detail = (body as { detail?: string }).detail ?? resp.statusText;
    throw new ApiError(resp.status, detail);
  }
  return body as T;
}

export function submitWhatIf(baseUrl: string, req: WhatIfRequest): Promise<WhatIfResponse> {
  return requestJson<WhatIfResponse>(`${baseUrl}/whatif`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(req),
  });
}

export function getHealth(baseUrl: string): Promise<{ status: string; tasks: string[] }> {
  return requestJson(`${baseUrl}/healthz`);
}

export function getRuns(baseUrl: string): Promise<RunSummary[]> {
  return requestJson(`${baseUrl}/runs`);
}

export function getReport(baseUrl: string, runId: string): Promise<{ run_id: string; report: string }> {
  return requestJson(`${baseUrl}/runs/${encodeURIComponent(runId)}/report`);
}
