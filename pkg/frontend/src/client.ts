import {
  CreatedSession,
  NoQuery,
  Progress,
  QueryDescriptor,
  SessionParams,
  SessionResult,
} from "./types.js";

export class ServiceError extends Error {
  constructor(public status: number, public kind: string, message: string) {
    super(message);
  }
}

async function asJson<T>(resp: Response): Promise<T> {
  const body = await resp.json();
  if (!resp.ok) {
    throw new ServiceError(resp.status, body.error ?? "unknown", body.message ?? resp.statusText);
  }
  return body as T;
}

/**
 * Typed client for the session service.  Answer posting retries on network
 * failure with the same seq; the server treats a duplicate as stale and the
 * client swallows that, so a retried submit can never double-answer.
 */
export class ServiceClient {
  constructor(private base: string) {}

  async createSession(params: SessionParams): Promise<CreatedSession> {
    const resp = await fetch(`${this.base}/sessions`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ params }),
    });
    return asJson<CreatedSession>(resp);
  }

  async resumeSession(sessionId: string): Promise<CreatedSession> {
    const resp = await fetch(`${this.base}/sessions`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ resume: sessionId }),
    });
    return asJson<CreatedSession>(resp);
  }

  async nextQuery(sessionId: string): Promise<QueryDescriptor | NoQuery> {
    const resp = await fetch(`${this.base}/sessions/${sessionId}/query`);
    return asJson<QueryDescriptor | NoQuery>(resp);
  }

  async postAnswer(sessionId: string, seq: number, answer: number, retries = 2): Promise<void> {
    for (let attempt = 0; ; attempt += 1) {
      try {
        const resp = await fetch(`${this.base}/sessions/${sessionId}/answer`, {
          method: "POST",
          headers: { "Content-Type": "application/json" },
          body: JSON.stringify({ seq, answer }),
        });
        if (resp.status === 409) {
          // stale seq: the answer already went through on a previous attempt
          await resp.json();
          return;
        }
        await asJson(resp);
        return;
      } catch (err) {
        if (err instanceof ServiceError || attempt >= retries) throw err;
      }
    }
  }

  async result(sessionId: string): Promise<SessionResult> {
    const resp = await fetch(`${this.base}/sessions/${sessionId}/result`);
    return asJson<SessionResult>(resp);
  }

  async abort(sessionId: string): Promise<void> {
    const resp = await fetch(`${this.base}/sessions/${sessionId}/abort`, { method: "POST" });
    await asJson(resp);
  }

  /**
   * Subscribe to server-sent progress events.  Returns a cancel function.
   * Implemented over fetch streaming so it works in browsers and Node alike.
   */
  watchEvents(sessionId: string, onEvent: (p: Progress) => void): () => void {
    const controller = new AbortController();
    (async () => {
      try {
        const resp = await fetch(`${this.base}/sessions/${sessionId}/events`, {
          signal: controller.signal,
        });
        if (!resp.ok || resp.body == null) return;
        const reader = resp.body.getReader();
        const decoder = new TextDecoder();
        let buffer = "";
        for (;;) {
          const { done, value } = await reader.read();
          if (done) break;
          buffer += decoder.decode(value, { stream: true });
          let idx;
          while ((idx = buffer.indexOf("\n\n")) >= 0) {
            const chunk = buffer.slice(0, idx);
            buffer = buffer.slice(idx + 2);
            const line = chunk.split("\n").find((l) => l.startsWith("data: "));
            if (line) onEvent(JSON.parse(line.slice(6)) as Progress);
          }
        }
      } catch {
        // stream closed or aborted: the poller keeps the UI consistent
      }
    })();
    return () => controller.abort();
  }
}
