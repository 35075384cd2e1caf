// Wires the form, the result cards, and the history list to the service.
// One what-if request in flight at a time; submissions made while a request
// is pending are queued and replayed in order.

import { ApiError, submitWhatIf, type WhatIfRequest } from "./api.js";
import { SessionHistory } from "./history.js";
import { renderCards, renderErrorBanner } from "./render.js";

export const DIMENSIONS = [
  "Guidance",
  "Jargon",
  "Confidence",
  "GlobalFocus",
  "Sentiment",
  "Uncertainty",
];

export class WhatIfApp {
  readonly history = new SessionHistory();
  private inFlight = false;
  private queue: WhatIfRequest[] = [];

  constructor(
    private baseUrl: string,
    private onRender: (html: string) => void,
    private onHistory: (html: string) => void,
  ) {}

  setBaseUrl(url: string): void {
    this.baseUrl = url.replace(/\/+$/, "");
  }

  submit(req: WhatIfRequest): Promise<void> {
    if (this.inFlight) {
      this.queue.push(req);
      return Promise.resolve();
    }
    return this.run(req);
  }

  private async run(req: WhatIfRequest): Promise<void> {
    this.inFlight = true;
    try {
      const resp = await submitWhatIf(this.baseUrl, req);
      this.history.add(req.text, req.dimensions, resp);
      this.onRender(renderCards(req.text, resp.results));
      this.onHistory(this.renderHistory());
    } catch (err) {
      const msg =
        err instanceof ApiError ? `request failed (${err.status}): ${err.message}` : String(err);
      this.onRender(renderErrorBanner(msg));
    } finally {
      this.inFlight = false;
      const next = this.queue.shift();
      if (next) void this.run(next);
    }
  }

  renderHistory(): string {
    const items = this.history
      .list()
      .map((e, i) => {
        const dims = e.dimensions.join(", ");
        const preview = e.draft.length > 60 ? `${e.draft.slice(0, 60)}…` : e.draft;
        return `<li data-round="${i}"><strong>#${i + 1}</strong> [${dims}] ${preview}</li>`;
      })
      .join("");
    return `<ol class="history">${items}</ol>`;
  }
}

export function mount(root: Document): WhatIfApp {
  const results = root.getElementById("results")!;
  const historyEl = root.getElementById("history")!;
  const app = new WhatIfApp(
    (root.getElementById("base-url") as HTMLInputElement).value || "http://127.0.0.1:8765",
    (html) => (results.innerHTML = html),
    (html) => (historyEl.innerHTML = html),
  );
  root.getElementById("whatif-form")!.addEventListener("submit", (ev) => {
    ev.preventDefault();
    const text = (root.getElementById("draft") as HTMLTextAreaElement).value;
    const dims = DIMENSIONS.filter(
      (d) => (root.getElementById(`dim-${d}`) as HTMLInputElement).checked,
    );
    app.setBaseUrl((root.getElementById("base-url") as HTMLInputElement).value);
    void app.submit({ text, dimensions: dims, horizon: 1 });
  });
  return app;
}
