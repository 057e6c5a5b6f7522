/** Score gauge view-model.
 *
 * Pure presentation math over numbers the service returned: the gauge never
 * derives a score, it only positions the needle and picks colors for a
 * server-provided value against server-provided thresholds.
 */

import { Band, BloomName, bloomOrdinal } from "./types.js";

export const BAND_COLORS: Record<Band, string> = {
  Beginning: "#d9534f",
  Developing: "#f0ad4e",
  Proficient: "#5cb85c",
};

// One color per Bloom ordinal 1..6, cold to warm.
export const BLOOM_COLORS = ["#9e9e9e", "#64b5f6", "#4db6ac", "#ffb74d", "#ba68c8", "#e57373"];

export interface GaugeView {
  value: number; // the server's s, unmodified
  percentText: string;
  angleDeg: number; // needle angle over a half circle
  band: Band;
  color: string;
  thresholds: { t1: number; t2: number };
}

export function gaugeView(s: number, band: Band, thresholds: [number, number]): GaugeView {
  const clamped = Math.min(1, Math.max(0, s)); // degenerate inputs only; s arrives already in [0,1]
  return {
    value: s,
    percentText: `${(s * 100).toFixed(1)}%`,
    angleDeg: -90 + 180 * clamped,
    band,
    color: BAND_COLORS[band],
    thresholds: { t1: thresholds[0], t2: thresholds[1] },
  };
}

export function bloomColor(name: BloomName): string {
  return BLOOM_COLORS[bloomOrdinal(name) - 1];
}

/** Gauge tick positions for the two band boundaries, as needle angles. */
export function thresholdAngles(thresholds: [number, number]): [number, number] {
  return [-90 + 180 * thresholds[0], -90 + 180 * thresholds[1]];
}
