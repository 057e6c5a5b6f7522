"use strict";
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
Object.defineProperty(exports, "__esModule", { value: true });
exports.WorkbenchSession = void 0;
exports.applyHint = applyHint;
const api_js_1 = require("./api.js");
class WorkbenchSession {
    api;
    itemId;
    phase = "idle";
    state = null;
    history = [];
    lastError = null;
    constructor(api, itemId) {
        this.api = api;
        this.itemId = itemId;
    }
    get locked() {
        return this.phase === "terminated";
    }
    get currentScore() {
        return this.state ? this.state.breakdown.s : null;
    }
    get currentHints() {
        return this.state ? this.state.hints : [];
    }
    /** Submit the initial sketch and enter the loop. */
    async start(graph) {
        const state = await this.api.createSession(this.itemId, graph);
        this.state = state;
        this.history = [state];
        this.phase = state.terminated ? "terminated" : "active";
        this.lastError = null;
        return state;
    }
    /** Submit a revision for the next iteration index. */
    async step(model) {
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
        }
        catch (err) {
            if (err instanceof api_js_1.ApiError && err.status === 409) {
                // Someone else won this iteration or the session finished: the
                // server state is authoritative, flag for refresh and lock edits
                // until the trace is reloaded.
                this.lastError = err.message;
                await this.refresh();
                return { kind: "conflict", state: this.state ?? undefined, message: err.message };
            }
            if (err instanceof api_js_1.ApiError && err.status === 400) {
                this.lastError = err.message;
                return { kind: "invalid", message: err.message };
            }
            throw err;
        }
    }
    /** Re-sync phase from the server after a conflict. */
    async refresh() {
        if (!this.state) {
            return;
        }
        const trace = await this.api.trace(this.state.session_id);
        const last = trace.iterations[trace.iterations.length - 1];
        const terminated = trace.terminated_by === "threshold_met" || trace.iterations.length > trace.t_max;
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
    async exportTrace() {
        if (!this.state) {
            throw new Error("session not started");
        }
        return this.api.trace(this.state.session_id);
    }
    /** Every s value the UI has displayed, in order, straight from payloads. */
    displayedScores() {
        return this.history.map((s) => s.breakdown.s);
    }
}
exports.WorkbenchSession = WorkbenchSession;
/** Apply one hinted repair to the editor, mirroring what a student would
 * draw. Only gold-side gaps are actionable; cautions are informational. */
function applyHint(model, hint) {
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
function bloomBelow(a, b) {
    const order = ["Remember", "Understand", "Apply", "Analyze", "Evaluate", "Create"];
    return order.indexOf(a) < order.indexOf(b);
}
