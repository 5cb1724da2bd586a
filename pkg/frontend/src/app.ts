import { ServiceClient } from "./client.js";
import { isPending, Progress, SessionParams } from "./types.js";
import { renderIdle, renderProgress, renderQuery } from "./view.js";

export type AppElements = {
  query: HTMLElement;
  progress: HTMLElement;
  result: HTMLElement;
};

/**
 * Session controller: one pending query at a time, answers posted through
 * the client, progress via server-sent events.  `refresh()` re-fetches the
 * pending query from the service, which is also what a page reload does —
 * the service, not the page, owns the session state.
 */
export class SessionApp {
  sessionId: string | null = null;
  private stopEvents: (() => void) | null = null;
  private polling = false;
  private pollTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(private client: ServiceClient, private ui: AppElements) {}

  async create(params: SessionParams): Promise<string> {
    const created = await this.client.createSession(params);
    this.attach(created.session_id);
    return created.session_id;
  }

  async resume(sessionId: string): Promise<void> {
    await this.client.resumeSession(sessionId);
    this.attach(sessionId);
  }

  attach(sessionId: string): void {
    this.detach();
    this.sessionId = sessionId;
    this.stopEvents = this.client.watchEvents(sessionId, (p: Progress) => {
      renderProgress(this.ui.progress, p);
      if (p.status === "complete" || p.status === "aborted") {
        void this.showResult();
      }
    });
    void this.refresh();
  }

  detach(): void {
    if (this.stopEvents) this.stopEvents();
    if (this.pollTimer != null) clearTimeout(this.pollTimer);
    this.stopEvents = null;
    this.pollTimer = null;
    this.sessionId = null;
  }

  async refresh(): Promise<void> {
    const sid = this.sessionId;
    if (sid == null || this.polling) return;
    this.polling = true;
    try {
      const q = await this.client.nextQuery(sid);
      if (this.sessionId !== sid) return; // detached while the poll was in flight
      if (isPending(q)) {
        renderQuery(this.ui.query, q, (seq, answer) => void this.answer(seq, answer));
      } else {
        renderIdle(this.ui.query, q.status);
        if (q.status === "complete" || q.status === "aborted") {
          await this.showResult();
          return;
        }
        // engine is between queries: ask again shortly
        this.pollTimer = setTimeout(() => void this.refresh(), 50);
      }
    } catch {
      // transient network failure: retry unless the session was detached
      if (this.sessionId === sid) {
        this.pollTimer = setTimeout(() => void this.refresh(), 250);
      }
    } finally {
      this.polling = false;
    }
  }

  async answer(seq: number, answer: number): Promise<void> {
    if (this.sessionId == null) return;
    await this.client.postAnswer(this.sessionId, seq, answer);
    await this.refresh();
  }

  async abort(): Promise<void> {
    if (this.sessionId == null) return;
    await this.client.abort(this.sessionId);
    await this.showResult();
  }

  private async showResult(): Promise<void> {
    if (this.sessionId == null) return;
    const res = await this.client.result(this.sessionId);
    renderIdle(this.ui.query, res.status);
    this.ui.result.textContent = JSON.stringify(res, null, 2);
  }
}

/** Wire the static index.html controls; no-op outside a browser document. */
export function mount(doc: Document): SessionApp | null {
  const root = doc.getElementById("app");
  if (!root) return null;
  const base = (doc.getElementById("service-url") as HTMLInputElement | null)?.value ??
    "http://127.0.0.1:8204";
  const app = new SessionApp(new ServiceClient(base), {
    query: doc.getElementById("query-root") as HTMLElement,
    progress: doc.getElementById("progress-root") as HTMLElement,
    result: doc.getElementById("result-root") as HTMLElement,
  });
  doc.getElementById("create-session")?.addEventListener("click", () => {
    const mode = (doc.getElementById("mode-select") as HTMLSelectElement).value as
      | "exact"
      | "tctc";
    void app.create({ mode, n_reps: 1, seed: Date.now() % 100000 });
  });
  doc.getElementById("resume-session")?.addEventListener("click", () => {
    const sid = (doc.getElementById("session-id") as HTMLInputElement).value.trim();
    if (sid) void app.resume(sid);
  });
  doc.getElementById("abort-session")?.addEventListener("click", () => void app.abort());
  return app;
}
