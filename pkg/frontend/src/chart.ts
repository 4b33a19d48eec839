// Pure chart geometry plus drawing against a minimal 2D-context interface,
// so everything here is testable without a browser canvas. The geometry
// mirrors the server-side gallery renderer, keeping live view and saved
// images visually consistent.

import type { ChartStatePayload } from "./types.js";

export const PALETTE: Record<string, string> = {
  red: "#d64541",
  orange: "#eb9732",
  yellow: "#f0d44d",
  green: "#5eae5c",
  blue: "#4f81d8",
  purple: "#9b5ec7",
  gray: "#949494",
};

export const PALETTE_ORDER = [
  "red",
  "orange",
  "yellow",
  "green",
  "blue",
  "purple",
  "gray",
];

export function nextColor(current: string): string {
  const idx = PALETTE_ORDER.indexOf(current);
  return PALETTE_ORDER[(idx + 1) % PALETTE_ORDER.length];
}

export interface Draw2D {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  closePath(): void;
  fill(): void;
  stroke(): void;
}

export interface Rect {
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface PlotFrame {
  left: number;
  right: number;
  top: number;
  bottom: number;
}

export function plotFrame(width: number, height: number): PlotFrame {
  return {
    left: Math.round(width * 0.11),
    right: Math.round(width * 0.96),
    top: Math.round(height * 0.12),
    bottom: Math.round(height * 0.82),
  };
}

export function slotCenters(n: number, frame: PlotFrame): number[] {
  const span = frame.right - frame.left;
  const centers: number[] = [];
  for (let i = 0; i < n; i++) {
    centers.push(Math.round(frame.left + (span * (i + 0.5)) / n));
  }
  return centers;
}

export function valueToY(value: number, yMax: number, frame: PlotFrame): number {
  const frac = yMax > 0 ? Math.min(Math.max(value / yMax, 0), 1) : 0;
  return Math.round(frame.bottom - frac * (frame.bottom - frame.top));
}

export function barRects(chart: ChartStatePayload, width: number, height: number): Rect[] {
  const frame = plotFrame(width, height);
  const centers = slotCenters(chart.n_points, frame);
  const slotW = (frame.right - frame.left) / chart.n_points;
  const barW = Math.max(Math.round(slotW * 0.6), 6);
  const yMax = chart.y_max ?? 1;
  return chart.values.map((value, i) => {
    const top = valueToY(value, yMax, frame);
    const h = Math.max(frame.bottom - top, 1); // zero keeps a 1px stub
    return { x: centers[i] - Math.floor(barW / 2), y: frame.bottom - h, w: barW, h };
  });
}

export interface Wedge {
  startRad: number; // clockwise from 12 o'clock
  endRad: number;
}

export function pieWedges(fractions: number[]): Wedge[] {
  let acc = 0;
  return fractions.map((f) => {
    const start = acc;
    acc += f * 2 * Math.PI;
    return { startRad: start, endRad: acc };
  });
}

export function hitTestBar(
  chart: ChartStatePayload,
  width: number,
  height: number,
  x: number,
  y: number,
): number | null {
  const frame = plotFrame(width, height);
  const centers = slotCenters(chart.n_points, frame);
  const slotW = (frame.right - frame.left) / chart.n_points;
  for (let i = 0; i < chart.n_points; i++) {
    if (Math.abs(x - centers[i]) <= slotW / 2 && y >= frame.top && y <= frame.bottom) {
      return i;
    }
  }
  return null;
}

export function hitTestPie(
  chart: ChartStatePayload,
  width: number,
  height: number,
  x: number,
  y: number,
): number | null {
  const cx = width * 0.55;
  const cy = height * 0.5;
  const radius = Math.min(width, height) * 0.34;
  const dx = x - cx;
  const dy = y - cy;
  if (dx * dx + dy * dy > radius * radius) {
    return null;
  }
  // angle clockwise from 12 o'clock
  const ang = (Math.atan2(dx, -dy) + 2 * Math.PI) % (2 * Math.PI);
  const wedges = pieWedges(chart.values);
  for (let i = 0; i < wedges.length; i++) {
    if (ang >= wedges[i].startRad && ang < wedges[i].endRad) {
      return i;
    }
  }
  return wedges.length ? wedges.length - 1 : null;
}

export function hitTestMark(
  chart: ChartStatePayload,
  width: number,
  height: number,
  x: number,
  y: number,
): number | null {
  if (chart.kind === "pie") {
    return hitTestPie(chart, width, height, x, y);
  }
  return hitTestBar(chart, width, height, x, y);
}

const INK = "#282828";
const BG = "#fcfcfa";

function drawAxes(ctx: Draw2D, chart: ChartStatePayload, frame: PlotFrame): void {
  ctx.fillStyle = INK;
  ctx.fillRect(frame.left - 2, frame.top - 8, 2, frame.bottom - frame.top + 10);
  ctx.fillRect(frame.left - 2, frame.bottom, frame.right - frame.left + 4, 2);
}

function drawBar(ctx: Draw2D, chart: ChartStatePayload, width: number, height: number): void {
  const frame = plotFrame(width, height);
  drawAxes(ctx, chart, frame);
  barRects(chart, width, height).forEach((rect, i) => {
    ctx.fillStyle = PALETTE[chart.colors[i]] ?? "#000000";
    ctx.fillRect(rect.x, rect.y, rect.w, rect.h);
  });
}

function drawLine(ctx: Draw2D, chart: ChartStatePayload, width: number, height: number): void {
  const frame = plotFrame(width, height);
  drawAxes(ctx, chart, frame);
  const centers = slotCenters(chart.n_points, frame);
  const yMax = chart.y_max ?? 1;
  ctx.strokeStyle = INK;
  ctx.lineWidth = 3;
  ctx.beginPath();
  chart.values.forEach((v, i) => {
    const y = valueToY(v, yMax, frame);
    if (i === 0) {
      ctx.moveTo(centers[i], y);
    } else {
      ctx.lineTo(centers[i], y);
    }
  });
  ctx.stroke();
  chart.values.forEach((v, i) => {
    ctx.fillStyle = PALETTE[chart.colors[i]] ?? "#000000";
    const y = valueToY(v, yMax, frame);
    ctx.fillRect(centers[i] - 6, y - 6, 13, 13);
  });
}

function drawPie(ctx: Draw2D, chart: ChartStatePayload, width: number, height: number): void {
  const cx = width * 0.55;
  const cy = height * 0.5;
  const radius = Math.min(width, height) * 0.34;
  const wedges = pieWedges(chart.values);
  wedges.forEach((wedge, i) => {
    ctx.fillStyle = PALETTE[chart.colors[i]] ?? "#000000";
    ctx.beginPath();
    ctx.moveTo(cx, cy);
    // canvas arcs measure from +x counterclockwise-positive; convert from
    // clockwise-from-north
    ctx.arc(cx, cy, radius, wedge.startRad - Math.PI / 2, wedge.endRad - Math.PI / 2);
    ctx.closePath();
    ctx.fill();
  });
  // legend swatches
  chart.colors.forEach((color, i) => {
    ctx.fillStyle = PALETTE[color] ?? "#000000";
    ctx.fillRect(width * 0.05, height * 0.2 + i * 34, 22, 22);
  });
}

export function drawChart(
  ctx: Draw2D,
  chart: ChartStatePayload,
  width: number,
  height: number,
): void {
  ctx.fillStyle = BG;
  ctx.fillRect(0, 0, width, height);
  if (chart.kind === "bar") {
    drawBar(ctx, chart, width, height);
  } else if (chart.kind === "line") {
    drawLine(ctx, chart, width, height);
  } else {
    drawPie(ctx, chart, width, height);
  }
}
