"use strict";
/** Score gauge view-model.
 *
 * Pure presentation math over numbers the service returned: the gauge never
 * derives a score, it only positions the needle and picks colors for a
 * server-provided value against server-provided thresholds.
 */
Object.defineProperty(exports, "__esModule", { value: true });
exports.BLOOM_COLORS = exports.BAND_COLORS = void 0;
exports.gaugeView = gaugeView;
exports.bloomColor = bloomColor;
exports.thresholdAngles = thresholdAngles;
const types_js_1 = require("./types.js");
exports.BAND_COLORS = {
    Beginning: "#d9534f",
    Developing: "#f0ad4e",
    Proficient: "#5cb85c",
};
// One color per Bloom ordinal 1..6, cold to warm.
exports.BLOOM_COLORS = ["#9e9e9e", "#64b5f6", "#4db6ac", "#ffb74d", "#ba68c8", "#e57373"];
function gaugeView(s, band, thresholds) {
    const clamped = Math.min(1, Math.max(0, s)); // degenerate inputs only; s arrives already in [0,1]
    return {
        value: s,
        percentText: `${(s * 100).toFixed(1)}%`,
        angleDeg: -90 + 180 * clamped,
        band,
        color: exports.BAND_COLORS[band],
        thresholds: { t1: thresholds[0], t2: thresholds[1] },
    };
}
function bloomColor(name) {
    return exports.BLOOM_COLORS[(0, types_js_1.bloomOrdinal)(name) - 1];
}
/** Gauge tick positions for the two band boundaries, as needle angles. */
function thresholdAngles(thresholds) {
    return [-90 + 180 * thresholds[0], -90 + 180 * thresholds[1]];
}
