"use strict";
var __importDefault = (this && this.__importDefault) || function (mod) {
    return (mod && mod.__esModule) ? mod : { "default": mod };
};
Object.defineProperty(exports, "__esModule", { value: true });
const strict_1 = __importDefault(require("node:assert/strict"));
const node_test_1 = require("node:test");
const gauge_js_1 = require("../src/gauge.js");
(0, node_test_1.test)("gauge carries the server value through unmodified", () => {
    const view = (0, gauge_js_1.gaugeView)(0.5975, "Developing", [0.5, 0.75]);
    strict_1.default.equal(view.value, 0.5975);
    strict_1.default.equal(view.percentText, "59.8%");
    strict_1.default.equal(view.band, "Developing");
    strict_1.default.equal(view.color, gauge_js_1.BAND_COLORS.Developing);
});
(0, node_test_1.test)("needle angle spans the half circle", () => {
    strict_1.default.equal((0, gauge_js_1.gaugeView)(0, "Beginning", [0.5, 0.75]).angleDeg, -90);
    strict_1.default.equal((0, gauge_js_1.gaugeView)(1, "Proficient", [0.5, 0.75]).angleDeg, 90);
    strict_1.default.equal((0, gauge_js_1.gaugeView)(0.5, "Developing", [0.5, 0.75]).angleDeg, 0);
});
(0, node_test_1.test)("band color comes from the server band, not the value", () => {
    // The client must not re-derive banding: even an inconsistent pair is
    // rendered as sent.
    const view = (0, gauge_js_1.gaugeView)(0.99, "Beginning", [0.5, 0.75]);
    strict_1.default.equal(view.color, gauge_js_1.BAND_COLORS.Beginning);
});
(0, node_test_1.test)("threshold tick angles", () => {
    const [a1, a2] = (0, gauge_js_1.thresholdAngles)([0.5, 0.75]);
    strict_1.default.equal(a1, 0);
    strict_1.default.equal(a2, 45);
});
(0, node_test_1.test)("bloom colors are distinct and ordered", () => {
    const colors = ["Remember", "Understand", "Apply", "Analyze", "Evaluate", "Create"].map((b) => (0, gauge_js_1.bloomColor)(b));
    strict_1.default.equal(new Set(colors).size, 6);
});
