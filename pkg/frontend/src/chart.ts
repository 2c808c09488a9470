/** Chart layout: positions for API chart documents, ready for SVG emission.
 *
 * Values are taken from the document as-is; nothing is recomputed
 * client-side.
 */

import type { ChartDoc, ChartPoint } from "./api.js";

export interface XY {
  x: number;
  y: number;
}

export interface LaidOutBar {
  series: string;
  label: string;
  x: number;
  y: number;
  width: number;
  height: number;
  value: number;
}

export interface LaidOutLine {
  series: string;
  points: XY[];
}

export interface LaidOutDot {
  series: string;
  x: number;
  y: number;
}

export interface ChartLayout {
  kind: string;
  title: string;
  width: number;
  height: number;
  xLabels: { text: string; x: number }[];
  yTicks: { value: number; y: number }[];
  bars: LaidOutBar[];
  lines: LaidOutLine[];
  dots: LaidOutDot[];
}

const PAD = { left: 56, right: 16, top: 28, bottom: 36 };

function categoryOrder(doc: ChartDoc): string[] {
  const seen = new Set<string>();
  const order: string[] = [];
  for (const series of doc.series) {
    for (const point of series.points) {
      const key = String(point.x);
      if (!seen.has(key)) {
        seen.add(key);
        order.push(key);
      }
    }
  }
  return order.sort();
}

function valueExtent(doc: ChartDoc): { lo: number; hi: number } {
  let lo = 0;
  let hi = 0;
  for (const series of doc.series) {
    for (const point of series.points) {
      if (point.y === null) continue;
      lo = Math.min(lo, point.y);
      hi = Math.max(hi, point.y);
    }
  }
  if (hi === lo) hi = lo + 1;
  return { lo, hi };
}

function yTickValues(lo: number, hi: number): number[] {
  const ticks: number[] = [];
  for (let i = 0; i <= 4; i++) ticks.push(lo + ((hi - lo) * i) / 4);
  return ticks;
}

export function layoutChart(doc: ChartDoc, width = 640, height = 320): ChartLayout {
  const innerW = width - PAD.left - PAD.right;
  const innerH = height - PAD.top - PAD.bottom;
  const categories = categoryOrder(doc);
  const { lo, hi } = valueExtent(doc);

  const xFor = (point: ChartPoint): number => {
    const index = categories.indexOf(String(point.x));
    const slots = Math.max(1, categories.length - 1);
    return categories.length === 1
      ? PAD.left + innerW / 2
      : PAD.left + (innerW * index) / slots;
  };
  const yFor = (value: number): number => PAD.top + innerH * (1 - (value - lo) / (hi - lo));

  const layout: ChartLayout = {
    kind: doc.kind,
    title: doc.title,
    width,
    height,
    xLabels: categories.map((text, index) => ({
      text,
      x:
        categories.length === 1
          ? PAD.left + innerW / 2
          : PAD.left + (innerW * index) / Math.max(1, categories.length - 1),
    })),
    yTicks: yTickValues(lo, hi).map((value) => ({ value, y: yFor(value) })),
    bars: [],
    lines: [],
    dots: [],
  };

  if (doc.kind === "bar") {
    const slotW = innerW / Math.max(1, categories.length);
    const barW = slotW * 0.6;
    for (const series of doc.series) {
      for (const point of series.points) {
        if (point.y === null) continue;
        const index = categories.indexOf(String(point.x));
        const top = yFor(point.y);
        const base = yFor(Math.max(lo, 0));
        layout.bars.push({
          series: series.name,
          label: String(point.x),
          x: PAD.left + slotW * index + (slotW - barW) / 2,
          y: Math.min(top, base),
          width: barW,
          height: Math.abs(base - top),
          value: point.y,
        });
      }
    }
    layout.xLabels = categories.map((text, index) => ({
      text,
      x: PAD.left + slotW * index + slotW / 2,
    }));
    return layout;
  }

  for (const series of doc.series) {
    if (doc.kind === "scatter") {
      for (const point of series.points) {
        if (point.y === null) continue;
        layout.dots.push({ series: series.name, x: xFor(point), y: yFor(point.y) });
      }
      continue;
    }
    // line and trace kinds: nulls split the polyline into visible gaps
    let run: XY[] = [];
    for (const point of series.points) {
      if (point.y === null) {
        if (run.length) layout.lines.push({ series: series.name, points: run });
        run = [];
        continue;
      }
      run.push({ x: xFor(point), y: yFor(point.y) });
    }
    if (run.length) layout.lines.push({ series: series.name, points: run });
  }
  return layout;
}
