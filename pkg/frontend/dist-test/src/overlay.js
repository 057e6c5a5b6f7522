"use strict";
/** Hint-overlay state: the server's OverlayScript (absolute pixel
 * instructions) plus client-only dismissal. Dismissing a hint hides its
 * shapes locally and never affects scoring. */
Object.defineProperty(exports, "__esModule", { value: true });
exports.OverlayState = void 0;
exports.rescaleOps = rescaleOps;
class OverlayState {
    ops = [];
    dismissed = new Set();
    load(ops) {
        this.ops = [...ops];
        // A hint that disappeared from the feedback no longer needs its
        // dismissal remembered; re-issued hints reappear.
        const active = new Set(ops.map((op) => op.hint_id));
        this.dismissed = new Set([...this.dismissed].filter((id) => active.has(id)));
    }
    dismiss(hintId) {
        this.dismissed.add(hintId);
    }
    restoreAll() {
        this.dismissed.clear();
    }
    isDismissed(hintId) {
        return this.dismissed.has(hintId);
    }
    /** Ops to draw, in server order, minus dismissed hints. */
    visible() {
        return this.ops.filter((op) => !this.dismissed.has(op.hint_id));
    }
    hintIds() {
        return [...new Set(this.ops.map((op) => op.hint_id))];
    }
}
exports.OverlayState = OverlayState;
/** Rescale ops rendered for one canvas size onto another (client resize). */
function rescaleOps(ops, from, to) {
    const sx = to[0] / from[0];
    const sy = to[1] / from[1];
    return ops.map((op) => ({
        ...op,
        x0: op.x0 * sx,
        y0: op.y0 * sy,
        x1: op.x1 * sx,
        y1: op.y1 * sy,
    }));
}
