/** Typed payloads of the service API (docs/api.md). The dashboard renders
 * these verbatim: every displayed number comes from a payload field. */

export interface ClarificationPayload {
  version: number;
  kind: "clarification";
  session_id: string;
  missing: string[];
  prompt: string;
  blocking: boolean;
}

export type RunStatus =
  | "running"
  | "awaiting_confirmation"
  | "completed"
  | "aborted";

export interface PlanJob {
  job_id: string;
  tool: string;
  task: string;
  materials: string[];
}

export interface PlanView {
  plan_id: string;
  jobs: PlanJob[];
  edges: [string, string][];
  applied_defaults: [string, unknown, string][];
}

export interface Snapshot {
  run_id: string;
  statuses: Record<string, string>;
  progress: number;
  outputs: Record<string, Record<string, [unknown, string]>>;
  awaiting_confirmation: Record<string, string[]>;
  aborted: boolean;
  finished: boolean;
}

export interface AnswerEntry {
  material: string;
  metric: string;
  value: number | string;
  unit: string;
}

export interface ReportPayload {
  run_id: string;
  answer: AnswerEntry[];
  applied_defaults: [string, unknown, string][];
  corrections: CorrectionEntry[];
  recoveries: Record<string, unknown>[];
  narrative: string;
}

export interface CorrectionEntry {
  job_id: string;
  rule_id: string;
  key: string;
  before: string | null;
  after: string;
  confirmed: boolean;
}

export interface RunPayload {
  version: number;
  kind: "run";
  run_id: string;
  status: RunStatus;
  snapshot: Snapshot;
  plan: PlanView;
  report?: ReportPayload | null;
  error?: string;
}

export type QueryResponse = ClarificationPayload | RunPayload;

export interface EventRecord {
  seq: number;
  time: number;
  job_id: string;
  kind: string;
  payload: Record<string, unknown>;
}

export interface EventsPayload {
  version: number;
  kind: "events";
  run_id: string;
  since: number;
  events: EventRecord[];
}

export interface FunnelStage {
  stage_id: string;
  input_count: number;
  output_count: number;
}

export interface FunnelPayload {
  version: number;
  kind: "funnel";
  screening_id: string;
  stages: FunnelStage[];
  survivor_count: number;
  shortlist_size: number;
  shortlist: string[];
}

export interface RunListPayload {
  version: number;
  kind: "runs";
  run_ids: string[];
}

export function isClarification(p: QueryResponse): p is ClarificationPayload {
  return p.kind === "clarification";
}
