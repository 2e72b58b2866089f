/** Browser shell: wires the session controller and renderers to the DOM.
 * Served statically by `mof-forge serve --ui frontend/dist`. */

import { ApiClient } from "./api.js";
import { SessionController } from "./session.js";
import {
  dagView,
  eventFeedView,
  funnelView,
  reportView,
} from "./viewmodel.js";
import {
  renderConfirmations,
  renderDag,
  renderEventFeed,
  renderFunnel,
  renderReport,
  renderTranscript,
} from "./render.js";

const api = new ApiClient("");
const session = new SessionController(
  api,
  `web-${Math.random().toString(36).slice(2, 8)}`,
);

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

function redraw(): void {
  el("transcript").innerHTML = renderTranscript(session.state.transcript);
  el("confirmations").innerHTML = renderConfirmations(
    session.state.confirmations,
  );
  const run = session.state.run;
  if (run) {
    el("run-title").textContent = `${run.run_id} — ${run.status}`;
    el("dag").innerHTML = renderDag(dagView(run.plan, run.snapshot));
    el("report").innerHTML = renderReport(
      run.report ? reportView(run.report) : null,
    );
  }
  el("events").innerHTML = renderEventFeed(
    eventFeedView(session.state.events),
  );
  el("stream-state").textContent = session.state.streamState;
  wireConfirmButtons();
}

function wireConfirmButtons(): void {
  for (const button of document.querySelectorAll<HTMLButtonElement>(
    ".confirmation button",
  )) {
    button.onclick = () => {
      const box = button.closest<HTMLElement>(".confirmation");
      const prompt = session.state.confirmations.find(
        (p) => p.runId === box?.dataset["run"],
      );
      if (prompt) {
        void session.confirm(prompt, button.dataset["action"] === "accept");
      }
    };
  }
}

async function loadFunnel(screeningId: string): Promise<void> {
  try {
    const payload = await api.getFunnel(screeningId);
    el("funnel").innerHTML = renderFunnel(funnelView(payload));
  } catch {
    el("funnel").innerHTML =
      `<p class="empty">No funnel report for ${screeningId}.</p>`;
  }
}

function wireShell(): void {
  const input = el("query-input") as HTMLInputElement;
  const form = el("query-form") as HTMLFormElement;
  form.onsubmit = (event) => {
    event.preventDefault();
    const text = input.value.trim();
    if (!text) return;
    input.value = "";
    void session.ask(text).then(redraw);
  };
  const funnelForm = el("funnel-form") as HTMLFormElement;
  const funnelInput = el("funnel-input") as HTMLInputElement;
  funnelForm.onsubmit = (event) => {
    event.preventDefault();
    void loadFunnel(funnelInput.value.trim() || "packaged-ch4");
  };
  session.onChange(redraw);
  redraw();
  void loadFunnel("packaged-ch4");
}

wireShell();
