/** Thin fetch client for the service endpoints plus a resumable event
 * cursor. Works in the browser and under Node (global fetch). */

import type {
  EventRecord,
  EventsPayload,
  FunnelPayload,
  QueryResponse,
  RunListPayload,
  RunPayload,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

async function asJson<T>(response: Response): Promise<T> {
  const body = await response.json().catch(() => ({}));
  if (!response.ok) {
    const err = body as { error?: string; message?: string };
    throw new ApiError(
      response.status,
      err.error ?? "http_error",
      err.message ?? `HTTP ${response.status}`,
    );
  }
  return body as T;
}

export class ApiClient {
  constructor(readonly baseUrl: string = "") {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  async submitQuery(
    sessionId: string,
    text: string,
    attachments: Record<string, string> = {},
  ): Promise<QueryResponse> {
    const response = await fetch(this.url("/queries"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ session_id: sessionId, text, attachments }),
    });
    return asJson<QueryResponse>(response);
  }

  async clarify(sessionId: string, text: string): Promise<QueryResponse> {
    const response = await fetch(
      this.url(`/sessions/${encodeURIComponent(sessionId)}/clarify`),
      {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ text }),
      },
    );
    return asJson<QueryResponse>(response);
  }

  async confirm(
    runId: string,
    ruleIds: string[],
    accept: boolean,
  ): Promise<RunPayload> {
    const response = await fetch(
      this.url(`/runs/${encodeURIComponent(runId)}/confirmations`),
      {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ rule_ids: ruleIds, accept }),
      },
    );
    return asJson<RunPayload>(response);
  }

  async getRun(runId: string): Promise<RunPayload> {
    const response = await fetch(
      this.url(`/runs/${encodeURIComponent(runId)}`),
    );
    return asJson<RunPayload>(response);
  }

  async listRuns(): Promise<RunListPayload> {
    const response = await fetch(this.url("/runs"));
    return asJson<RunListPayload>(response);
  }

  async getEvents(runId: string, since: number): Promise<EventsPayload> {
    const response = await fetch(
      this.url(`/runs/${encodeURIComponent(runId)}/events?since=${since}`),
    );
    return asJson<EventsPayload>(response);
  }

  async getFunnel(screeningId: string): Promise<FunnelPayload> {
    const response = await fetch(
      this.url(`/screenings/${encodeURIComponent(screeningId)}/funnel`),
    );
    return asJson<FunnelPayload>(response);
  }
}

export interface CursorCallbacks {
  onEvents: (events: EventRecord[]) => void;
  onStateChange?: (state: "polling" | "retrying" | "stopped") => void;
}

/** Incremental event consumption with a resume cursor. Connection loss is
 * retried with backoff and the cursor guarantees no event is skipped or
 * duplicated across reconnects. */
export class EventCursor {
  private cursor = 0;
  private stopped = false;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly runId: string,
    private readonly callbacks: CursorCallbacks,
    private readonly intervalMs = 300,
  ) {}

  get position(): number {
    return this.cursor;
  }

  start(): void {
    this.stopped = false;
    void this.poll(this.intervalMs);
  }

  stop(): void {
    this.stopped = true;
    if (this.timer !== null) clearTimeout(this.timer);
    this.callbacks.onStateChange?.("stopped");
  }

  private async poll(delay: number): Promise<void> {
    if (this.stopped) return;
    try {
      const payload = await this.api.getEvents(this.runId, this.cursor);
      if (payload.events.length > 0) {
        const last = payload.events[payload.events.length - 1];
        if (last) this.cursor = last.seq;
        this.callbacks.onEvents(payload.events);
      }
      this.callbacks.onStateChange?.("polling");
      this.schedule(this.intervalMs);
    } catch {
      this.callbacks.onStateChange?.("retrying");
      this.schedule(Math.min(delay * 2, 5000));
    }
  }

  private schedule(delay: number): void {
    if (this.stopped) return;
    this.timer = setTimeout(() => void this.poll(delay), delay);
  }
}
