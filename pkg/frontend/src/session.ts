/** Headless session controller: the browser shell and the scripted test
 * sessions drive exactly this object, so round-trip behavior is testable
 * without a DOM. All state it holds is copied from API payloads. */

import { ApiClient, EventCursor } from "./api.js";
import type {
  EventRecord,
  QueryResponse,
  RunPayload,
} from "./types.js";
import {
  clarificationTurn,
  pendingConfirmations,
  type ConfirmationPrompt,
  type TranscriptTurn,
} from "./viewmodel.js";
import { isClarification } from "./types.js";

export interface SessionState {
  transcript: TranscriptTurn[];
  run: RunPayload | null;
  events: EventRecord[];
  confirmations: ConfirmationPrompt[];
  awaitingClarification: boolean;
  streamState: "idle" | "polling" | "retrying" | "stopped";
}

export class SessionController {
  readonly state: SessionState = {
    transcript: [],
    run: null,
    events: [],
    confirmations: [],
    awaitingClarification: false,
    streamState: "idle",
  };

  private cursor: EventCursor | null = null;
  private listeners: (() => void)[] = [];

  constructor(
    private readonly api: ApiClient,
    readonly sessionId: string,
  ) {}

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  /** Submit a query, or answer the open clarification if one is pending. */
  async ask(
    text: string,
    attachments: Record<string, string> = {},
  ): Promise<QueryResponse> {
    this.state.transcript.push({ speaker: "user", text });
    const response = this.state.awaitingClarification
      ? await this.api.clarify(this.sessionId, text)
      : await this.api.submitQuery(this.sessionId, text, attachments);
    this.absorb(response);
    return response;
  }

  async confirm(prompt: ConfirmationPrompt, accept: boolean): Promise<RunPayload> {
    const run = await this.api.confirm(prompt.runId, prompt.ruleIds, accept);
    this.state.transcript.push({
      speaker: "user",
      text: `${accept ? "Accepted" : "Rejected"} corrections: ${prompt.ruleIds.join(", ")}`,
    });
    this.absorbRun(run);
    return run;
  }

  /** Re-fetch the followed run (used after event activity). */
  async refresh(): Promise<void> {
    if (!this.state.run) return;
    this.absorbRun(await this.api.getRun(this.state.run.run_id));
  }

  stop(): void {
    this.cursor?.stop();
  }

  private absorb(response: QueryResponse): void {
    if (isClarification(response)) {
      this.state.awaitingClarification = true;
      this.state.transcript.push(clarificationTurn(response.prompt));
      this.notify();
      return;
    }
    this.state.awaitingClarification = false;
    this.absorbRun(response);
  }

  private absorbRun(run: RunPayload): void {
    const isNewRun = this.state.run?.run_id !== run.run_id;
    this.state.run = run;
    this.state.confirmations = pendingConfirmations(run);
    if (run.report?.narrative) {
      const last = this.state.transcript[this.state.transcript.length - 1];
      if (!last || last.text !== run.report.narrative) {
        this.state.transcript.push({
          speaker: "engine",
          text: run.report.narrative,
        });
      }
    } else if (run.status === "awaiting_confirmation") {
      this.state.transcript.push({
        speaker: "engine",
        text:
          "The run is parked on physics-changing corrections; confirm or " +
          "reject them to continue.",
      });
    }
    if (isNewRun) {
      this.followEvents(run.run_id);
    }
    this.notify();
  }

  private followEvents(runId: string): void {
    this.cursor?.stop();
    this.state.events = [];
    this.cursor = new EventCursor(this.api, runId, {
      onEvents: (events) => {
        this.state.events.push(...events);
        this.notify();
        // run state may have advanced with the events
        void this.refresh();
      },
      onStateChange: (streamState) => {
        this.state.streamState = streamState;
        this.notify();
      },
    });
    this.cursor.start();
  }
}
