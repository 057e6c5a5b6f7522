/** Workbench session state machine.
 *
 * Wraps the service's stateful revision sessions: submit the edited graph,
 * keep the returned breakdown/hints as the single source of truth, lock the
 * editor once the server reports termination, and recover from optimistic-
 * concurrency conflicts by marking the state stale for a refresh.
 *
 * Every score shown in the UI is a number from a server payload; the
 * history below stores those payloads verbatim so tests (and the trace
 * export) can prove no client-side computation happened.
 */

import { ApiClient, ApiError } from "./api.js";
import { GraphModel } from "./model.js";
import { HintJson, SessionStateJson, SrgJson, TraceJson } from "./types.js";

export type Phase = "idle" | "active" | "terminated";

export interface StepOutcome {
  kind: "accepted" | "terminated" | "conflict" | "invalid";
  state?: SessionStateJson;
  message?: string;
}

export class WorkbenchSession {
  phase: Phase = "idle";
  state: SessionStateJson | null = null;
  history: SessionStateJson[] = [];
  lastError: string | null = null;

  constructor(
    private api: ApiClient,
    private itemId: string,
  ) {}

  get locked(): boolean {
    return this.phase === "terminated";
  }

  get currentScore(): number | null {
    return this.state ? this.state.breakdown.s : null;
  }

  get currentHints(): HintJson[] {
    return this.state ? this.state.hints : [];
  }

  /** Submit the initial sketch and enter the loop. */
  async start(graph: SrgJson): Promise<SessionStateJson> {
    const state = await this.api.createSession(this.itemId, graph);
    this.state = state;
    this.history = [state];
    this.phase = state.terminated ? "terminated" : "active";
    this.lastError = null;
    return state;
  }

  /** Submit a revision for the next iteration index. */
  async step(model: GraphModel): Promise<StepOutcome> {
    if (!this.state) {
      throw new Error("session not started");
    }
    if (this.locked) {
      return { kind: "terminated", state: this.state, message: "session is complete" };
    }
    try {
      const next = await this.api.step(this.state.session_id, model.toJson(), this.state.t + 1);
      this.state = next;
      this.history.push(next);
      model.dirty = false;
      if (next.terminated) {
        this.phase = "terminated";
        return { kind: "terminated", state: next };
      }
      return { kind: "accepted", state: next };
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // Someone else won this iteration or the session finished: the
        // server state is authoritative, flag for refresh and lock edits
        // until the trace is reloaded.
        this.lastError = err.message;
        await this.refresh();
        return { kind: "conflict", state: this.state ?? undefined, message: err.message };
      }
      if (err instanceof ApiError && err.status === 400) {
        this.lastError = err.message;
        return { kind: "invalid", message: err.message };
      }
      throw err;
    }
  }

  /** Re-sync phase from the server after a conflict. */
  async refresh(): Promise<void> {
    if (!this.state) {
      return;
    }
    const trace = await this.api.trace(this.state.session_id);
    const last = trace.iterations[trace.iterations.length - 1];
    const terminated =
      trace.terminated_by === "threshold_met" || trace.iterations.length > trace.t_max;
    this.state = {
      ...this.state,
      t: last.t,
      breakdown: last.breakdown,
      hints: last.hints,
      terminated,
      terminated_by: terminated ? trace.terminated_by : null,
    };
    if (terminated) {
      this.phase = "terminated";
    }
  }

  async exportTrace(): Promise<TraceJson> {
    if (!this.state) {
      throw new Error("session not started");
    }
    return this.api.trace(this.state.session_id);
  }

  /** Every s value the UI has displayed, in order, straight from payloads. */
  displayedScores(): number[] {
    return this.history.map((s) => s.breakdown.s);
  }
}

/** Apply one hinted repair to the editor, mirroring what a student would
 * draw. Only gold-side gaps are actionable; cautions are informational. */
export function applyHint(model: GraphModel, hint: HintJson): boolean {
  const d = hint.deficiency;
  if (d.kind === "missing_node" && d.gold_node && d.expected_bloom) {
    if (!model.findByConcept(d.gold_node.concept)) {
      model.addNode(d.gold_node.concept, d.expected_bloom);
      return true;
    }
    return false;
  }
  if (d.kind === "bloom_regression" && d.student_node && d.expected_bloom) {
    const node = model.getNode(d.student_node.id);
    if (node && bloomBelow(node.bloom, d.expected_bloom)) {
      model.updateNode(node.id, { bloom: d.expected_bloom });
      return true;
    }
    return false;
  }
  if (d.kind === "missing_edge" && d.edge_concepts) {
    const [srcConcept, relation, tgtConcept] = d.edge_concepts;
    const src = model.findByConcept(srcConcept);
    const tgt = model.findByConcept(tgtConcept);
    if (src && tgt && src.id !== tgt.id && !model.hasEdge(src.id, tgt.id, relation)) {
      model.addEdge(src.id, tgt.id, relation);
      return true;
    }
    return false;
  }
  return false;
}

function bloomBelow(a: string, b: string): boolean {
  const order = ["Remember", "Understand", "Apply", "Analyze", "Evaluate", "Create"];
  return order.indexOf(a) < order.indexOf(b);
}
