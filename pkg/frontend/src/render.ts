/** Canvas and DOM rendering for the workbench. Browser-only module. */

import { bloomColor, gaugeView, thresholdAngles } from "./gauge.js";
import { GraphModel } from "./model.js";
import { OverlayState } from "./overlay.js";
import { Band, BloomName, HintJson, OverlayOpJson, SrgEdgeJson } from "./types.js";

export interface CanvasGeometry {
  width: number;
  height: number;
}

const NODE_RADIUS = 26;

function shorten(text: string, max = 18): string {
  const pretty = text.replace(/_/g, " ");
  return pretty.length <= max ? pretty : pretty.slice(0, max - 1) + "…";
}

export function drawScene(
  canvas: HTMLCanvasElement,
  background: HTMLImageElement | null,
  model: GraphModel,
  overlay: OverlayState,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) {
    return;
  }
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (background && background.complete && background.naturalWidth > 0) {
    ctx.globalAlpha = 0.45;
    ctx.drawImage(background, 0, 0, canvas.width, canvas.height);
    ctx.globalAlpha = 1.0;
  }
  drawOverlayOps(ctx, overlay.visible());
  for (const edge of model.listEdges()) {
    drawEdge(ctx, canvas, model, edge);
  }
  for (const node of model.listNodes()) {
    const x = node.position.x * canvas.width;
    const y = node.position.y * canvas.height;
    ctx.beginPath();
    ctx.arc(x, y, NODE_RADIUS, 0, Math.PI * 2);
    ctx.fillStyle = bloomColor(node.bloom);
    ctx.fill();
    ctx.lineWidth = model.selection === node.id ? 4 : 1.5;
    ctx.strokeStyle = model.selection === node.id ? "#222" : "#555";
    ctx.stroke();
    ctx.fillStyle = "#111";
    ctx.font = "11px sans-serif";
    ctx.textAlign = "center";
    ctx.fillText(shorten(node.concept), x, y + NODE_RADIUS + 12);
  }
}

function drawEdge(
  ctx: CanvasRenderingContext2D,
  canvas: HTMLCanvasElement,
  model: GraphModel,
  edge: SrgEdgeJson,
): void {
  const a = model.getNode(edge.source);
  const b = model.getNode(edge.target);
  if (!a || !b) {
    return;
  }
  const x0 = a.position.x * canvas.width;
  const y0 = a.position.y * canvas.height;
  const x1 = b.position.x * canvas.width;
  const y1 = b.position.y * canvas.height;
  ctx.beginPath();
  ctx.moveTo(x0, y0);
  ctx.lineTo(x1, y1);
  ctx.strokeStyle = "#444";
  ctx.lineWidth = 1.5;
  ctx.stroke();
  drawArrowHead(ctx, x0, y0, x1, y1, "#444");
  ctx.fillStyle = "#333";
  ctx.font = "10px sans-serif";
  ctx.textAlign = "center";
  ctx.fillText(edge.relation, (x0 + x1) / 2, (y0 + y1) / 2 - 4);
}

function drawArrowHead(
  ctx: CanvasRenderingContext2D,
  x0: number,
  y0: number,
  x1: number,
  y1: number,
  color: string,
): void {
  const angle = Math.atan2(y1 - y0, x1 - x0);
  const tipX = x1 - NODE_RADIUS * Math.cos(angle);
  const tipY = y1 - NODE_RADIUS * Math.sin(angle);
  ctx.beginPath();
  ctx.moveTo(tipX, tipY);
  ctx.lineTo(tipX - 9 * Math.cos(angle - 0.45), tipY - 9 * Math.sin(angle - 0.45));
  ctx.lineTo(tipX - 9 * Math.cos(angle + 0.45), tipY - 9 * Math.sin(angle + 0.45));
  ctx.closePath();
  ctx.fillStyle = color;
  ctx.fill();
}

export function drawOverlayOps(ctx: CanvasRenderingContext2D, ops: OverlayOpJson[]): void {
  for (const op of ops) {
    ctx.save();
    ctx.strokeStyle = "#d81b60";
    ctx.fillStyle = "rgba(216, 27, 96, 0.12)";
    ctx.lineWidth = 2;
    if (op.op === "rect") {
      ctx.fillRect(op.x0, op.y0, op.x1 - op.x0, op.y1 - op.y0);
      ctx.strokeRect(op.x0, op.y0, op.x1 - op.x0, op.y1 - op.y0);
    } else if (op.op === "arrow") {
      ctx.beginPath();
      ctx.moveTo(op.x0, op.y0);
      ctx.lineTo(op.x1, op.y1);
      ctx.stroke();
      drawArrowHead(ctx, op.x0, op.y0, op.x1 + NODE_RADIUS * Math.cos(Math.atan2(op.y1 - op.y0, op.x1 - op.x0)), op.y1 + NODE_RADIUS * Math.sin(Math.atan2(op.y1 - op.y0, op.x1 - op.x0)), "#d81b60");
    }
    if (op.text && (op.op === "label" || op.op === "rect" || op.op === "arrow")) {
      ctx.fillStyle = "#ad1457";
      ctx.font = "12px sans-serif";
      ctx.textAlign = "left";
      ctx.fillText(op.text, Math.min(op.x0, op.x1) + 4, Math.min(op.y0, op.y1) - 4);
    }
    ctx.restore();
  }
}

export function renderGauge(
  el: HTMLElement,
  s: number,
  band: Band,
  thresholds: [number, number],
): void {
  const view = gaugeView(s, band, thresholds);
  const [a1, a2] = thresholdAngles(thresholds);
  el.innerHTML = `
    <svg viewBox="-110 -110 220 120" class="gauge-svg">
      <path d="M -100 0 A 100 100 0 0 1 100 0" fill="none" stroke="#ddd" stroke-width="16"/>
      <line x1="0" y1="0" x2="${100 * Math.sin((a1 * Math.PI) / 180)}" y2="${-100 * Math.cos((a1 * Math.PI) / 180)}" stroke="#aaa" stroke-dasharray="4 3"/>
      <line x1="0" y1="0" x2="${100 * Math.sin((a2 * Math.PI) / 180)}" y2="${-100 * Math.cos((a2 * Math.PI) / 180)}" stroke="#aaa" stroke-dasharray="4 3"/>
      <line x1="0" y1="0" x2="${88 * Math.sin((view.angleDeg * Math.PI) / 180)}" y2="${-88 * Math.cos((view.angleDeg * Math.PI) / 180)}" stroke="${view.color}" stroke-width="5" stroke-linecap="round"/>
      <circle cx="0" cy="0" r="7" fill="${view.color}"/>
    </svg>
    <div class="gauge-score" style="color:${view.color}">${view.percentText}</div>
    <div class="gauge-band" style="background:${view.color}">${view.band}</div>`;
}

export function renderHintList(
  el: HTMLElement,
  hints: HintJson[],
  overlay: OverlayState,
  onDismiss: (hintId: string) => void,
): void {
  el.innerHTML = "";
  if (!hints.length) {
    el.innerHTML = '<p class="muted">No hints right now.</p>';
    return;
  }
  for (const hint of hints) {
    const row = document.createElement("div");
    row.className = "hint" + (overlay.isDismissed(hint.hint_id) ? " dismissed" : "");
    const badge = document.createElement("span");
    badge.className = "bloom-badge";
    badge.style.background = bloomColor(hint.bloom_target as BloomName);
    badge.textContent = hint.bloom_target;
    const text = document.createElement("span");
    text.textContent = ` ${hint.text}`;
    const dismiss = document.createElement("button");
    dismiss.textContent = "dismiss";
    dismiss.onclick = () => onDismiss(hint.hint_id);
    row.append(badge, text, dismiss);
    el.append(row);
  }
}
