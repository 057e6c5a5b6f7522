/** Hint-overlay state: the server's OverlayScript (absolute pixel
 * instructions) plus client-only dismissal. Dismissing a hint hides its
 * shapes locally and never affects scoring. */

import { OverlayOpJson } from "./types.js";

export class OverlayState {
  private ops: OverlayOpJson[] = [];
  private dismissed = new Set<string>();

  load(ops: OverlayOpJson[]): void {
    this.ops = [...ops];
    // A hint that disappeared from the feedback no longer needs its
    // dismissal remembered; re-issued hints reappear.
    const active = new Set(ops.map((op) => op.hint_id));
    this.dismissed = new Set([...this.dismissed].filter((id) => active.has(id)));
  }

  dismiss(hintId: string): void {
    this.dismissed.add(hintId);
  }

  restoreAll(): void {
    this.dismissed.clear();
  }

  isDismissed(hintId: string): boolean {
    return this.dismissed.has(hintId);
  }

  /** Ops to draw, in server order, minus dismissed hints. */
  visible(): OverlayOpJson[] {
    return this.ops.filter((op) => !this.dismissed.has(op.hint_id));
  }

  hintIds(): string[] {
    return [...new Set(this.ops.map((op) => op.hint_id))];
  }
}

/** Rescale ops rendered for one canvas size onto another (client resize). */
export function rescaleOps(
  ops: OverlayOpJson[],
  from: [number, number],
  to: [number, number],
): OverlayOpJson[] {
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
