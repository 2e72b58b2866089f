/** HTML-string renderers over the view models. Kept DOM-free so tests can
 * assert payload-vs-markup equality without a browser. */

import type {
  DagView,
  EventLine,
  FunnelView,
  ReportView,
  TranscriptTurn,
  ConfirmationPrompt,
} from "./viewmodel.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderTranscript(turns: TranscriptTurn[]): string {
  if (turns.length === 0) {
    return `<p class="empty">No conversation yet. Ask something below.</p>`;
  }
  const items = turns
    .map((turn) => {
      const cls = turn.speaker === "user" ? "turn user" : "turn engine";
      const marker = turn.needsInput
        ? ` <span class="needs-input">needs an answer</span>`
        : "";
      return `<div class="${cls}">${escapeHtml(turn.text)}${marker}</div>`;
    })
    .join("\n");
  return items;
}

const NODE_W = 148;
const NODE_H = 40;
const GAP_X = 52;
const GAP_Y = 16;

export function renderDag(view: DagView): string {
  if (view.nodes.length === 0) {
    return `<p class="empty">No plan yet.</p>`;
  }
  const position = new Map<string, { x: number; y: number }>();
  for (const node of view.nodes) {
    position.set(node.jobId, {
      x: node.layer * (NODE_W + GAP_X),
      y: node.row * (NODE_H + GAP_Y),
    });
  }
  const width =
    Math.max(...view.nodes.map((n) => n.layer + 1)) * (NODE_W + GAP_X);
  const height =
    (Math.max(...view.nodes.map((n) => n.row)) + 1) * (NODE_H + GAP_Y);

  const edges = view.edges
    .map((edge) => {
      const a = position.get(edge.from);
      const b = position.get(edge.to);
      if (!a || !b) return "";
      return (
        `<line x1="${a.x + NODE_W}" y1="${a.y + NODE_H / 2}" ` +
        `x2="${b.x}" y2="${b.y + NODE_H / 2}" class="dag-edge"/>`
      );
    })
    .join("\n");

  const nodes = view.nodes
    .map((node) => {
      const pos = position.get(node.jobId);
      if (!pos) return "";
      const label = escapeHtml(node.jobId);
      return (
        `<g class="dag-node" data-job="${escapeHtml(node.jobId)}" ` +
        `data-status="${node.status}">` +
        `<rect x="${pos.x}" y="${pos.y}" width="${NODE_W}" height="${NODE_H}" ` +
        `rx="6" fill="${node.color}"/>` +
        `<title>${label} [${node.status}] ${escapeHtml(node.task)}</title>` +
        `<text x="${pos.x + 8}" y="${pos.y + 24}">${label}</text></g>`
      );
    })
    .join("\n");

  return (
    `<svg viewBox="0 0 ${width} ${height}" width="${width}" ` +
    `height="${height}" role="img">${edges}\n${nodes}</svg>`
  );
}

export function renderEventFeed(lines: EventLine[]): string {
  if (lines.length === 0) {
    return `<p class="empty">No events.</p>`;
  }
  const rows = lines
    .map(
      (line) =>
        `<tr data-seq="${line.seq}"><td>${line.seq}</td>` +
        `<td>${escapeHtml(line.jobId)}</td>` +
        `<td>${escapeHtml(line.kind)}</td>` +
        `<td>${escapeHtml(line.detail)}</td></tr>`,
    )
    .join("\n");
  return `<table class="events"><thead><tr><th>seq</th><th>job</th><th>kind</th><th>detail</th></tr></thead><tbody>${rows}</tbody></table>`;
}

export function renderFunnel(view: FunnelView): string {
  if (view.bars.length === 0) {
    return `<p class="empty">No funnel report.</p>`;
  }
  const bars = view.bars
    .map((bar) => {
      const pct = Math.max(2, Math.round(bar.widthFraction * 100));
      return (
        `<div class="funnel-stage" data-stage="${escapeHtml(bar.stageId)}">` +
        `<span class="stage-label">${escapeHtml(bar.stageId)}</span>` +
        `<div class="bar" style="width:${pct}%"></div>` +
        `<span class="counts" data-in="${bar.inputCount}" ` +
        `data-out="${bar.outputCount}">${bar.inputCount} → ` +
        `${bar.outputCount}</span></div>`
      );
    })
    .join("\n");
  return (
    `<div class="funnel">${bars}\n<p class="funnel-summary">` +
    `${view.survivorCount} survivors, shortlist ${view.shortlistSize}</p></div>`
  );
}

export function renderReport(view: ReportView | null): string {
  if (!view) {
    return `<p class="empty">No report yet.</p>`;
  }
  const rows = view.rows
    .map(
      (row) =>
        `<tr><td>${escapeHtml(row.material)}</td>` +
        `<td>${escapeHtml(row.metric)}</td>` +
        `<td class="value">${escapeHtml(row.value)}</td>` +
        `<td>${escapeHtml(row.unit)}</td></tr>`,
    )
    .join("\n");
  const narrative = view.narrativeLines
    .map((line) => `<p>${escapeHtml(line)}</p>`)
    .join("\n");
  const corrections = view.corrections
    .map(
      (c) =>
        `<li class="${c.confirmed ? "confirmed" : "auto"}">` +
        `${escapeHtml(c.ruleId)}: ${escapeHtml(c.change)}</li>`,
    )
    .join("\n");
  return (
    `<table class="answers"><tbody>${rows}</tbody></table>` +
    `<div class="narrative">${narrative}</div>` +
    (corrections ? `<ul class="corrections">${corrections}</ul>` : "")
  );
}

export function renderConfirmations(prompts: ConfirmationPrompt[]): string {
  if (prompts.length === 0) return "";
  return prompts
    .map((prompt) => {
      const rules = prompt.ruleIds.map(escapeHtml).join(", ");
      return (
        `<div class="confirmation" data-run="${escapeHtml(prompt.runId)}" ` +
        `data-rules="${rules}">` +
        `<span>Job ${escapeHtml(prompt.jobId)} proposes physics-changing ` +
        `corrections: ${rules}</span>` +
        `<button class="accept" data-action="accept">Accept</button>` +
        `<button class="reject" data-action="reject">Reject</button></div>`
      );
    })
    .join("\n");
}

export function renderRunList(runIds: string[]): string {
  if (runIds.length === 0) {
    return `<p class="empty">No runs yet.</p>`;
  }
  return (
    `<ul class="runs">` +
    runIds
      .map((id) => `<li><a href="#" data-run="${escapeHtml(id)}">${escapeHtml(id)}</a></li>`)
      .join("") +
    `</ul>`
  );
}
