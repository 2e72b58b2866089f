/** Pure payload -> view-model functions. Rendered state is a function of API
 * payloads only: numbers pass through verbatim, and the only derived data is
 * presentation geometry (DAG layers, bar widths). */

import type {
  EventRecord,
  FunnelPayload,
  PlanView,
  ReportPayload,
  RunPayload,
  Snapshot,
} from "./types.js";

export type NodeState =
  | "Pending"
  | "Ready"
  | "Running"
  | "Succeeded"
  | "Failed"
  | "Recovering";

export const STATE_COLORS: Record<NodeState, string> = {
  Pending: "#8888a0",
  Ready: "#3b82f6",
  Running: "#eab308",
  Succeeded: "#22c55e",
  Failed: "#ef4444",
  Recovering: "#a855f7",
};

export interface DagNode {
  jobId: string;
  tool: string;
  task: string;
  status: NodeState;
  color: string;
  layer: number;
  row: number;
}

export interface DagEdge {
  from: string;
  to: string;
}

export interface DagView {
  nodes: DagNode[];
  edges: DagEdge[];
  layerCount: number;
}

/** Layer each job by its longest predecessor path (layout only). */
export function dagView(plan: PlanView, snapshot: Snapshot): DagView {
  const preds = new Map<string, string[]>();
  for (const job of plan.jobs) preds.set(job.job_id, []);
  for (const [from, to] of plan.edges) preds.get(to)?.push(from);

  const depth = new Map<string, number>();
  const visit = (jobId: string, trail: Set<string>): number => {
    const known = depth.get(jobId);
    if (known !== undefined) return known;
    if (trail.has(jobId)) return 0; // defensive; plans are acyclic
    trail.add(jobId);
    const parents = preds.get(jobId) ?? [];
    const level = parents.length
      ? 1 + Math.max(...parents.map((p) => visit(p, trail)))
      : 0;
    depth.set(jobId, level);
    return level;
  };
  for (const job of plan.jobs) visit(job.job_id, new Set());

  const rows = new Map<number, number>();
  const nodes: DagNode[] = plan.jobs
    .slice()
    .sort((a, b) => a.job_id.localeCompare(b.job_id))
    .map((job) => {
      const layer = depth.get(job.job_id) ?? 0;
      const row = rows.get(layer) ?? 0;
      rows.set(layer, row + 1);
      const status = (snapshot.statuses[job.job_id] ?? "Pending") as NodeState;
      return {
        jobId: job.job_id,
        tool: job.tool,
        task: job.task,
        status,
        color: STATE_COLORS[status] ?? STATE_COLORS.Pending,
        layer,
        row,
      };
    });
  return {
    nodes,
    edges: plan.edges.map(([from, to]) => ({ from, to })),
    layerCount: Math.max(0, ...nodes.map((n) => n.layer + 1)),
  };
}

export interface EventLine {
  seq: number;
  jobId: string;
  kind: string;
  detail: string;
}

/** Event feed lines in seq order; rejects out-of-order input rather than
 * silently resorting (ordering is an API guarantee worth surfacing). */
export function eventFeedView(events: EventRecord[]): EventLine[] {
  for (let i = 1; i < events.length; i++) {
    const prev = events[i - 1];
    const here = events[i];
    if (prev && here && here.seq <= prev.seq) {
      throw new Error(`event feed out of order at seq ${here.seq}`);
    }
  }
  return events.map((event) => ({
    seq: event.seq,
    jobId: event.job_id,
    kind: event.kind,
    detail: summarizePayload(event),
  }));
}

function summarizePayload(event: EventRecord): string {
  const p = event.payload;
  switch (event.kind) {
    case "Started":
      return `cores=${String(p["cores"])} attempt=${String(p["attempt"])}`;
    case "Finished":
      return `status=${String(p["status"])}`;
    case "ValidationFinding":
      return `${String(p["rule_id"])} (${String(p["severity"])})`;
    case "CorrectionApplied":
      return `${String(p["rule_id"])}: ${String(p["key"])} -> ${String(p["after"])}`;
    case "ConfirmationRequested":
      return `rules=${(p["rule_ids"] as string[]).join(", ")}`;
    case "RecoveryScheduled":
      return `attempt=${String(p["attempt"])} ${String(p["category"])} -> ${String(p["action"])}`;
    case "Aborted":
      return String(p["reason"]);
    default:
      return "";
  }
}

export interface FunnelBar {
  stageId: string;
  inputCount: number;
  outputCount: number;
  /** width fraction of the widest stage input, layout only */
  widthFraction: number;
}

export interface FunnelView {
  bars: FunnelBar[];
  survivorCount: number;
  shortlistSize: number;
}

export function funnelView(payload: FunnelPayload): FunnelView {
  const widest = Math.max(1, ...payload.stages.map((s) => s.input_count));
  return {
    bars: payload.stages.map((stage) => ({
      stageId: stage.stage_id,
      inputCount: stage.input_count,
      outputCount: stage.output_count,
      widthFraction: stage.output_count / widest,
    })),
    survivorCount: payload.survivor_count,
    shortlistSize: payload.shortlist_size,
  };
}

export interface ReportView {
  rows: { material: string; metric: string; value: string; unit: string }[];
  narrativeLines: string[];
  corrections: { ruleId: string; change: string; confirmed: boolean }[];
  defaults: string[];
}

export function reportView(report: ReportPayload): ReportView {
  return {
    rows: report.answer.map((entry) => ({
      material: entry.material,
      metric: entry.metric,
      value: String(entry.value),
      unit: entry.unit,
    })),
    narrativeLines: report.narrative.split("\n").filter((l) => l.length > 0),
    corrections: report.corrections.map((c) => ({
      ruleId: c.rule_id,
      change:
        c.before === null
          ? `${c.key} set to ${c.after}`
          : `${c.key}: ${c.before} -> ${c.after}`,
      confirmed: c.confirmed,
    })),
    defaults: report.applied_defaults.map(
      ([param, value, source]) => `${param} = ${String(value)} (${source})`,
    ),
  };
}

export interface ConfirmationPrompt {
  runId: string;
  jobId: string;
  ruleIds: string[];
}

export function pendingConfirmations(run: RunPayload): ConfirmationPrompt[] {
  return Object.entries(run.snapshot.awaiting_confirmation).map(
    ([jobId, ruleIds]) => ({ runId: run.run_id, jobId, ruleIds }),
  );
}

export interface TranscriptTurn {
  speaker: "user" | "engine";
  text: string;
  needsInput?: boolean;
}

export function clarificationTurn(prompt: string): TranscriptTurn {
  return { speaker: "engine", text: prompt, needsInput: true };
}
