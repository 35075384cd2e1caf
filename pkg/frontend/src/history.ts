// Session history: each submitted round is kept in memory for the session
// only; the service owns all durable state.

import type { WhatIfResponse } from "./api.js";

export interface HistoryEntry {
  draft: string;
  dimensions: string[];
  response: WhatIfResponse;
  at: Date;
}

export class SessionHistory {
  private entries: HistoryEntry[] = [];

  add(draft: string, dimensions: string[], response: WhatIfResponse): void {
    this.entries.push({ draft, dimensions, response, at: new Date() });
  }

  list(): readonly HistoryEntry[] {
    return this.entries;
  }

  get length(): number {
    return this.entries.length;
  }
}
