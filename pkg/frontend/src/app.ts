/** Workbench bootstrap: item picker, editor interactions, session flow. */

import { ApiClient, ApiError } from "./api.js";
import { GraphModel } from "./model.js";
import { OverlayState } from "./overlay.js";
import { drawScene, renderGauge, renderHintList } from "./render.js";
import { WorkbenchSession, applyHint } from "./session.js";
import { BLOOM_ORDER, BloomName, ItemDetailJson, TraceJson } from "./types.js";

const api = new ApiClient("");

interface AppState {
  detail: ItemDetailJson | null;
  model: GraphModel | null;
  session: WorkbenchSession | null;
  overlay: OverlayState;
  background: HTMLImageElement | null;
  edgeSource: string | null;
}

const state: AppState = {
  detail: null,
  model: null,
  session: null,
  overlay: new OverlayState(),
  background: null,
  edgeSource: null,
};

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) {
    throw new Error(`missing element #${id}`);
  }
  return found as T;
}

function canvas(): HTMLCanvasElement {
  return el<HTMLCanvasElement>("canvas");
}

function setStatus(message: string, isError = false): void {
  const status = el("status");
  status.textContent = message;
  status.className = isError ? "status error" : "status";
}

function redraw(): void {
  if (state.model) {
    drawScene(canvas(), state.background, state.model, state.overlay);
  }
}

async function loadItems(): Promise<void> {
  const items = await api.listItems();
  const picker = el<HTMLSelectElement>("item-picker");
  picker.innerHTML = items
    .map((i) => `<option value="${i.item_id}">${i.item_id} (up to ${i.highest_bloom})</option>`)
    .join("");
  if (items.length) {
    await pickItem(items[0].item_id);
  }
  picker.onchange = () => void pickItem(picker.value);
}

async function pickItem(itemId: string): Promise<void> {
  state.detail = await api.itemDetail(itemId);
  state.model = new GraphModel(itemId);
  state.session = null;
  state.overlay = new OverlayState();
  state.edgeSource = null;
  el("prompt").textContent = state.detail.prompt_text;
  const concepts = state.detail.ontology.concepts
    .map((c) => c.id)
    .filter((c) => c !== state.detail?.ontology.root)
    .sort();
  el<HTMLSelectElement>("concept-picker").innerHTML = concepts
    .map((c) => `<option>${c}</option>`)
    .join("");
  el<HTMLSelectElement>("bloom-picker").innerHTML = BLOOM_ORDER.map(
    (b, i) => `<option value="${b}">${i + 1} ${b}</option>`,
  ).join("");
  el<HTMLSelectElement>("relation-picker").innerHTML = state.detail.ontology.relations
    .map((r) => `<option>${r}</option>`)
    .join("");
  const imageRef = state.detail.image_refs[0];
  state.background = null;
  if (imageRef && /^https?:/.test(imageRef)) {
    const img = new Image();
    img.src = imageRef;
    img.onload = redraw;
    state.background = img;
  }
  setEditingEnabled(true);
  setStatus(`Loaded ${itemId}. Draw your model, then start a session.`);
  renderGauge(el("gauge"), 0, "Beginning", state.detail.scoring.band_thresholds);
  renderHintList(el("hints"), [], state.overlay, () => undefined);
  el("timeline").innerHTML = "";
  redraw();
}

function setEditingEnabled(enabled: boolean): void {
  for (const id of ["add-node", "delete-selection", "add-edge", "step", "start"]) {
    el<HTMLButtonElement>(id).disabled = !enabled;
  }
  el("editor-lock").style.display = enabled ? "none" : "block";
}

function selectedCanvasNode(x: number, y: number): string | null {
  if (!state.model) {
    return null;
  }
  const c = canvas();
  for (const node of state.model.listNodes()) {
    const nx = node.position.x * c.width;
    const ny = node.position.y * c.height;
    if ((nx - x) ** 2 + (ny - y) ** 2 <= 26 * 26) {
      return node.id;
    }
  }
  return null;
}

function wireEditor(): void {
  const c = canvas();
  c.addEventListener("click", (ev) => {
    if (!state.model || state.session?.locked) {
      return;
    }
    const rect = c.getBoundingClientRect();
    const hit = selectedCanvasNode(ev.clientX - rect.left, ev.clientY - rect.top);
    state.model.selection = hit;
    redraw();
  });

  el<HTMLButtonElement>("add-node").onclick = () => {
    if (!state.model || state.session?.locked) {
      return;
    }
    const concept = el<HTMLSelectElement>("concept-picker").value;
    const bloom = el<HTMLSelectElement>("bloom-picker").value as BloomName;
    const node = state.model.addNode(concept, bloom, {
      x: 0.15 + Math.random() * 0.7,
      y: 0.15 + Math.random() * 0.7,
    });
    state.model.selection = node.id;
    setStatus(`Added ${concept} at ${bloom}.`);
    redraw();
  };

  el<HTMLButtonElement>("delete-selection").onclick = () => {
    if (!state.model || !state.model.selection || state.session?.locked) {
      return;
    }
    state.model.removeNode(state.model.selection);
    setStatus("Removed the selected node.");
    redraw();
  };

  el<HTMLButtonElement>("add-edge").onclick = () => {
    if (!state.model || state.session?.locked) {
      return;
    }
    const selection = state.model.selection;
    if (!selection) {
      setStatus("Select the source node first, then press link again on the target.", true);
      return;
    }
    if (state.edgeSource === null) {
      state.edgeSource = selection;
      setStatus(`Linking from ${selection}: now select the target node and press link.`);
      return;
    }
    const relation = el<HTMLSelectElement>("relation-picker").value;
    try {
      state.model.addEdge(state.edgeSource, selection, relation);
      setStatus(`Linked ${state.edgeSource} -${relation}-> ${selection}.`);
    } catch (err) {
      setStatus(String(err), true);
    }
    state.edgeSource = null;
    redraw();
  };

  el<HTMLButtonElement>("bloom-apply").onclick = () => {
    if (!state.model || !state.model.selection || state.session?.locked) {
      return;
    }
    const bloom = el<HTMLSelectElement>("bloom-picker").value as BloomName;
    state.model.updateNode(state.model.selection, { bloom });
    setStatus(`Set ${state.model.selection} to ${bloom}.`);
    redraw();
  };
}

async function refreshFeedback(): Promise<void> {
  if (!state.model || !state.detail) {
    return;
  }
  const c = canvas();
  const feedback = await api.feedback(state.detail.item_id, state.model.toJson(), [c.width, c.height]);
  state.overlay.load(feedback.overlay);
  el("report").textContent = feedback.report_text;
  redraw();
}

function pushTimeline(t: number, s: number, band: string): void {
  const row = document.createElement("div");
  row.className = "timeline-entry";
  row.textContent = `t=${t}: ${(s * 100).toFixed(1)}% (${band})`;
  el("timeline").append(row);
}

function showState(): void {
  const session = state.session;
  if (!session || !session.state || !state.detail) {
    return;
  }
  const breakdown = session.state.breakdown;
  renderGauge(el("gauge"), breakdown.s, breakdown.band, state.detail.scoring.band_thresholds);
  el("bloom-readout").textContent = breakdown.dominant_bloom
    ? `Dominant cognitive level: ${breakdown.dominant_bloom}`
    : "Dominant cognitive level: not yet established";
  renderHintList(el("hints"), session.currentHints, state.overlay, (hintId) => {
    state.overlay.dismiss(hintId);
    renderHintList(el("hints"), session.currentHints, state.overlay, () => undefined);
    redraw();
  });
  pushTimeline(session.state.t, breakdown.s, breakdown.band);
  if (session.locked) {
    setEditingEnabled(false);
    el("editor-lock").textContent =
      session.state.terminated_by === "threshold_met"
        ? "Proficiency threshold reached. The session is complete."
        : "Iteration limit reached. The session is complete.";
    el("editor-lock").style.display = "block";
  }
}

function wireSession(): void {
  el<HTMLButtonElement>("start").onclick = async () => {
    if (!state.model || !state.detail) {
      return;
    }
    state.session = new WorkbenchSession(api, state.detail.item_id);
    try {
      await state.session.start(state.model.toJson());
      setStatus("Session started.");
      showState();
      await refreshFeedback();
    } catch (err) {
      setStatus(err instanceof ApiError ? err.message : String(err), true);
    }
  };

  el<HTMLButtonElement>("step").onclick = async () => {
    if (!state.model || !state.session) {
      setStatus("Start a session first.", true);
      return;
    }
    const outcome = await state.session.step(state.model);
    if (outcome.kind === "invalid") {
      setStatus(`The service rejected the graph: ${outcome.message}`, true);
      return;
    }
    if (outcome.kind === "conflict") {
      setStatus(`Step conflict, state refreshed: ${outcome.message}`, true);
    } else {
      setStatus(outcome.kind === "terminated" ? "Session complete." : "Revision scored.");
    }
    showState();
    if (!state.session.locked) {
      await refreshFeedback();
    }
  };

  el<HTMLButtonElement>("apply-hints").onclick = () => {
    if (!state.model || !state.session || state.session.locked) {
      return;
    }
    let applied = 0;
    for (const hint of state.session.currentHints) {
      if (applyHint(state.model, hint)) {
        applied += 1;
      }
    }
    setStatus(`Applied ${applied} hint(s) to the sketch.`);
    redraw();
  };

  el<HTMLButtonElement>("export-trace").onclick = async () => {
    if (!state.session) {
      return;
    }
    const trace: TraceJson = await state.session.exportTrace();
    const blob = new Blob([JSON.stringify(trace, null, 2)], { type: "application/json" });
    const link = document.createElement("a");
    link.href = URL.createObjectURL(blob);
    link.download = `${state.detail?.item_id ?? "session"}-trace.json`;
    link.click();
    URL.revokeObjectURL(link.href);
  };
}

window.addEventListener("DOMContentLoaded", () => {
  wireEditor();
  wireSession();
  void loadItems().catch((err) => setStatus(`Failed to load items: ${err}`, true));
});
