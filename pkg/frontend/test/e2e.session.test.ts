/** Scripted sessions against the real service (spawned in replay mode by the
 * global setup): the clarification round-trip, the confirmation round-trip,
 * the funnel view, and the resumable event stream. */

import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { SessionController } from "../src/session.js";
import {
  renderConfirmations,
  renderDag,
  renderFunnel,
  renderReport,
  renderTranscript,
} from "../src/render.js";
import {
  dagView,
  eventFeedView,
  funnelView,
  reportView,
} from "../src/viewmodel.js";
import { isClarification } from "../src/types.js";
import { SERVICE_URL } from "./globalSetup.js";

const api = new ApiClient(SERVICE_URL);

async function eventually<T>(
  fn: () => T | Promise<T>,
  predicate: (value: T) => boolean,
  timeoutMs = 10000,
): Promise<T> {
  const deadline = Date.now() + timeoutMs;
  let last: T;
  for (;;) {
    last = await fn();
    if (predicate(last)) return last;
    if (Date.now() > deadline) return last;
    await new Promise((r) => setTimeout(r, 100));
  }
}

describe("clarification round-trip", () => {
  it("prompts for a material, then runs and reports the surface area", async () => {
    const session = new SessionController(api, `ui-clar-${Date.now()}`);
    const first = await session.ask("What is the surface area of a MOF?");
    expect(isClarification(first)).toBe(true);
    expect(session.state.awaitingClarification).toBe(true);

    // the transcript shows the clarification prompt as input-needing
    let html = renderTranscript(session.state.transcript);
    expect(html).toContain("needs an answer");
    expect(html).toContain("No specific material was identified");

    const second = await session.ask(
      "I want to calculate the surface area of UiO-66",
    );
    expect(isClarification(second)).toBe(false);
    if (isClarification(second)) return;
    expect(second.status).toBe("completed");

    // report panel carries the value verbatim
    const report = second.report;
    expect(report).toBeTruthy();
    html = renderReport(reportView(report!));
    expect(html).toContain("1946.02");
    expect(html).toContain("surface_area");

    // DAG view reflects the final statuses from the snapshot
    html = renderDag(dagView(second.plan, second.snapshot));
    expect(html).toContain('data-status="Succeeded"');
    expect(html).not.toContain('data-status="Failed"');
    session.stop();
  });
});

describe("confirmation round-trip", () => {
  it("parks on the physics finding, resumes after acceptance", async () => {
    const session = new SessionController(api, `ui-conf-${Date.now()}`);
    const response = await session.ask(
      "Calculate the diffusion coefficient of CO2 in UiO-66",
      { "settings.txt": "pair_style lj/cut 12.0" },
    );
    expect(isClarification(response)).toBe(false);
    if (isClarification(response)) return;
    expect(response.status).toBe("awaiting_confirmation");

    // accept/reject buttons are offered for the pending rule
    expect(session.state.confirmations).toHaveLength(1);
    const prompt = session.state.confirmations[0]!;
    expect(prompt.ruleIds).toEqual(["md-electrostatics"]);
    const buttons = renderConfirmations(session.state.confirmations);
    expect(buttons).toContain('data-action="accept"');
    expect(buttons).toContain('data-action="reject"');

    const resumed = await session.confirm(prompt, true);
    expect(resumed.status).toBe("completed");
    expect(session.state.confirmations).toHaveLength(0);

    // the md job resumed and succeeded in the DAG view
    const html = renderDag(dagView(resumed.plan, resumed.snapshot));
    expect(html).toContain('data-job="u01.md"');
    expect(html).toContain('data-status="Succeeded"');

    // the report lists the confirmed correction
    const report = reportView(resumed.report!);
    expect(
      report.corrections.some(
        (c) => c.ruleId === "md-electrostatics" && c.confirmed,
      ),
    ).toBe(true);
    session.stop();
  });

  it("rejecting the correction aborts the job", async () => {
    const session = new SessionController(api, `ui-rej-${Date.now()}`);
    const response = await session.ask(
      "Calculate the diffusion coefficient of CO2 in UiO-66",
      { "settings.txt": "pair_style lj/cut 12.0" },
    );
    if (isClarification(response)) throw new Error("unexpected clarification");
    const prompt = session.state.confirmations[0]!;
    const resumed = await session.confirm(prompt, false);
    expect(resumed.status).toBe("aborted");
    expect(resumed.snapshot.statuses["u01.md"]).toBe("Failed");
    session.stop();
  });
});

describe("funnel view", () => {
  it("renders the packaged fixture counts verbatim", async () => {
    const payload = await api.getFunnel("packaged-ch4");
    const html = renderFunnel(funnelView(payload));
    expect(html).toContain("3786 → 3776");
    expect(html).toContain("3776 → 3771");
    expect(html).toContain("3771 → 1878");
    expect(html).toContain("1878 → 1000");
    expect(html).toContain("1878 survivors, shortlist 1000");
  });
});

describe("event stream", () => {
  it("streams events in seq order and resumes from a cursor", async () => {
    const session = new SessionController(api, `ui-ev-${Date.now()}`);
    const response = await session.ask("What is the band gap of GIFKEL?");
    if (isClarification(response)) throw new Error("unexpected clarification");

    const state = await eventually(
      () => session.state,
      (s) => s.events.length > 0 && s.events.some((e) => e.kind === "Finished"),
    );
    const seqs = state.events.map((e) => e.seq);
    expect(seqs).toEqual([...seqs].sort((a, b) => a - b));
    expect(() => eventFeedView(state.events)).not.toThrow();

    // resume from the middle of the log: exactly the tail comes back
    const full = await api.getEvents(response.run_id, 0);
    const middle = full.events[Math.floor(full.events.length / 2)]!.seq;
    const tail = await api.getEvents(response.run_id, middle);
    expect(tail.events.map((e) => e.seq)).toEqual(
      full.events.filter((e) => e.seq > middle).map((e) => e.seq),
    );

    // two consumers observe identical sequences
    const again = await api.getEvents(response.run_id, 0);
    expect(again.events).toEqual(full.events);
    session.stop();
  });
});
