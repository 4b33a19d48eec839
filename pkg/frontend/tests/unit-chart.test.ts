import assert from "node:assert/strict";
import { test } from "node:test";

import {
  barRects,
  hitTestBar,
  hitTestPie,
  nextColor,
  pieWedges,
  plotFrame,
  slotCenters,
  valueToY,
} from "../src/chart.js";
import type { ChartStatePayload } from "../src/types.js";

function barChart(values: number[], yMax = 10): ChartStatePayload {
  return {
    kind: "bar",
    n_points: values.length,
    values,
    colors: values.map(() => "red"),
    y_max: yMax,
    title_image: null,
    label_images: [],
    label_texts: [],
    paused: false,
    error: null,
  };
}

test("bar heights scale linearly with value", () => {
  const rects = barRects(barChart([0, 5, 10]), 800, 600);
  const frame = plotFrame(800, 600);
  assert.equal(rects[0].h, 1); // zero value keeps a 1px stub
  const full = frame.bottom - frame.top;
  assert.ok(Math.abs(rects[2].h - full) <= 1);
  assert.ok(Math.abs(rects[1].h - full / 2) <= 1);
});

test("bars stay inside the plot frame", () => {
  const rects = barRects(barChart([2, 4, 6, 8, 10]), 800, 600);
  const frame = plotFrame(800, 600);
  for (const r of rects) {
    assert.ok(r.x >= frame.left && r.x + r.w <= frame.right + 1);
    assert.ok(r.y >= frame.top - 1 && r.y + r.h <= frame.bottom + 1);
  }
});

test("valueToY clamps outside [0, yMax]", () => {
  const frame = plotFrame(800, 600);
  assert.equal(valueToY(-5, 10, frame), frame.bottom);
  assert.equal(valueToY(99, 10, frame), frame.top);
});

test("pie wedges cover the full turn in order", () => {
  const wedges = pieWedges([0.25, 0.25, 0.5]);
  assert.equal(wedges.length, 3);
  assert.equal(wedges[0].startRad, 0);
  for (let i = 1; i < wedges.length; i++) {
    assert.equal(wedges[i].startRad, wedges[i - 1].endRad);
  }
  assert.ok(Math.abs(wedges[2].endRad - 2 * Math.PI) < 1e-12);
});

test("hitTestBar finds the tapped slot", () => {
  const chart = barChart([1, 2, 3, 4, 5]);
  const frame = plotFrame(800, 600);
  const centers = slotCenters(5, frame);
  const mid = (frame.top + frame.bottom) / 2;
  assert.equal(hitTestBar(chart, 800, 600, centers[2], mid), 2);
  assert.equal(hitTestBar(chart, 800, 600, centers[4], mid), 4);
  assert.equal(hitTestBar(chart, 800, 600, 5, 5), null);
});

test("hitTestPie maps angles to wedges clockwise from north", () => {
  const chart: ChartStatePayload = {
    ...barChart([0.5, 0.5], 1),
    kind: "pie",
    y_max: null,
  };
  const cx = 800 * 0.55;
  const cy = 600 * 0.5;
  const r = 600 * 0.34 * 0.8;
  // right of center = clockwise 90 deg = first wedge
  assert.equal(hitTestPie(chart, 800, 600, cx + r, cy), 0);
  // left of center = clockwise 270 deg = second wedge
  assert.equal(hitTestPie(chart, 800, 600, cx - r, cy), 1);
  assert.equal(hitTestPie(chart, 800, 600, 10, 10), null);
});

test("nextColor cycles the palette", () => {
  assert.equal(nextColor("red"), "orange");
  assert.equal(nextColor("gray"), "red");
  let c = "red";
  for (let i = 0; i < 7; i++) {
    c = nextColor(c);
  }
  assert.equal(c, "red");
});
