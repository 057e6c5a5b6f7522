import assert from "node:assert/strict";
import { test } from "node:test";

import { BAND_COLORS, bloomColor, gaugeView, thresholdAngles } from "../src/gauge.js";

test("gauge carries the server value through unmodified", () => {
  const view = gaugeView(0.5975, "Developing", [0.5, 0.75]);
  assert.equal(view.value, 0.5975);
  assert.equal(view.percentText, "59.8%");
  assert.equal(view.band, "Developing");
  assert.equal(view.color, BAND_COLORS.Developing);
});

test("needle angle spans the half circle", () => {
  assert.equal(gaugeView(0, "Beginning", [0.5, 0.75]).angleDeg, -90);
  assert.equal(gaugeView(1, "Proficient", [0.5, 0.75]).angleDeg, 90);
  assert.equal(gaugeView(0.5, "Developing", [0.5, 0.75]).angleDeg, 0);
});

test("band color comes from the server band, not the value", () => {
  // The client must not re-derive banding: even an inconsistent pair is
  // rendered as sent.
  const view = gaugeView(0.99, "Beginning", [0.5, 0.75]);
  assert.equal(view.color, BAND_COLORS.Beginning);
});

test("threshold tick angles", () => {
  const [a1, a2] = thresholdAngles([0.5, 0.75]);
  assert.equal(a1, 0);
  assert.equal(a2, 45);
});

test("bloom colors are distinct and ordered", () => {
  const colors = ["Remember", "Understand", "Apply", "Analyze", "Evaluate", "Create"].map((b) =>
    bloomColor(b as never),
  );
  assert.equal(new Set(colors).size, 6);
});
