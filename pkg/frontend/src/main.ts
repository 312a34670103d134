// DOM wiring: start screen, one trial at a time with two forced-choice
// buttons, the verdict screen, and the admin list.  All state of record
// lives in the service; this file only renders FlowState and forwards
// clicks.

import { ApiClient } from "./api.js";
import { formatPValue, loadAdminView } from "./admin.js";
import { FlowState, SessionFlow } from "./flow.js";

const client = new ApiClient("");
const flow = new SessionFlow(client, renderState, window.localStorage);

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

const screens = {
  start: el<HTMLDivElement>("screen-start"),
  trial: el<HTMLDivElement>("screen-trial"),
  result: el<HTMLDivElement>("screen-result"),
  admin: el<HTMLDivElement>("screen-admin"),
};
const banner = el<HTMLDivElement>("error-banner");

function show(name: keyof typeof screens): void {
  for (const [key, node] of Object.entries(screens)) {
    node.hidden = key !== name;
  }
}

function renderState(state: FlowState): void {
  banner.hidden = state.phase !== "error";
  switch (state.phase) {
    case "idle":
      show("start");
      break;
    case "loading":
      break;
    case "trial":
    case "submitting": {
      show("trial");
      const { trial } = state;
      el<HTMLImageElement>("trial-image").src = trial.image_url;
      el<HTMLSpanElement>("trial-progress").textContent =
        `Trial ${trial.trial_index + 1} of ${trial.progress.total}`;
      const busy = state.phase === "submitting";
      el<HTMLButtonElement>("choose-real").disabled = busy;
      el<HTMLButtonElement>("choose-synthetic").disabled = busy;
      break;
    }
    case "result": {
      show("result");
      const r = state.result;
      el<HTMLSpanElement>("result-verdict").textContent = r.verdict;
      el<HTMLSpanElement>("result-verdict").className =
        r.verdict === "PASSED" ? "badge badge-passed" : "badge badge-failed";
      el<HTMLSpanElement>("result-detail").textContent =
        `${r.k_correct} of ${r.n} correct, p = ${formatPValue(r.p_value)} ` +
        `at alpha = ${r.alpha}`;
      el<HTMLParagraphElement>("result-caveat").textContent =
        r.verdict === "PASSED" ? `PASSED means ${r.caveat}.` : "";
      break;
    }
    case "error":
      el<HTMLSpanElement>("error-message").textContent = state.message;
      break;
  }
}

async function renderAdmin(): Promise<void> {
  show("admin");
  const tbody = el<HTMLTableSectionElement>("admin-rows");
  const emptyNote = el<HTMLParagraphElement>("admin-empty");
  try {
    const view = await loadAdminView(client);
    emptyNote.hidden = !view.empty;
    tbody.replaceChildren(
      ...view.rows.map((row) => {
        const tr = document.createElement("tr");
        const verdict = row.verdict
          ? `<span class="badge badge-${row.verdict.toLowerCase()}">${row.verdict}</span>`
          : row.status;
        tr.innerHTML =
          `<td><code>${row.sessionId}</code></td>` +
          `<td>${row.answered}/${row.n}</td>` +
          `<td>${row.kCorrect ?? "-"}</td>` +
          `<td>${formatPValue(row.pValue)}</td>` +
          `<td>${verdict}</td>`;
        return tr;
      }),
    );
  } catch (error) {
    banner.hidden = false;
    el<HTMLSpanElement>("error-message").textContent =
      error instanceof Error ? error.message : String(error);
  }
}

el<HTMLButtonElement>("start-button").addEventListener("click", () => {
  const raw = el<HTMLInputElement>("trial-count").value;
  void flow.start(raw ? Number(raw) : undefined);
});
el<HTMLButtonElement>("choose-real").addEventListener("click", () => {
  void flow.choose("real");
});
el<HTMLButtonElement>("choose-synthetic").addEventListener("click", () => {
  void flow.choose("synthetic");
});
el<HTMLButtonElement>("retry-button").addEventListener("click", () => {
  void flow.retry();
});
el<HTMLButtonElement>("again-button").addEventListener("click", () => {
  flow.clearStored();
  show("start");
});
el<HTMLAnchorElement>("admin-link").addEventListener("click", (event) => {
  event.preventDefault();
  void renderAdmin();
});
el<HTMLAnchorElement>("admin-back").addEventListener("click", (event) => {
  event.preventDefault();
  show("start");
});

const stored = flow.storedSessionId();
if (stored) {
  void flow.resume(stored);
} else {
  show("start");
}
