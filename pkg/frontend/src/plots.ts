/**
 * Figure builders: performance-vs-length curves (median and best trial per
 * variant), t-SNE state-space trajectories, and attention-mode histograms.
 */

import TSNE from "tsne-js";

import { ModeRow, ResultRow, TraceFile, TraceRecord } from "./data";
import { extent, Figure, progressColor, variantColor } from "./svg";

function median(values: number[]): number {
  const sorted = [...values].sort((a, b) => a - b);
  const mid = Math.floor(sorted.length / 2);
  return sorted.length % 2 ? sorted[mid] : (sorted[mid - 1] + sorted[mid]) / 2;
}

export interface PerfPlotOptions {
  memorySlots?: number; // vertical marker position
  bestWindow?: [number, number]; // length window for picking the best trial
}

/**
 * One figure: per variant a solid median-over-trials line and a dashed line
 * for the trial with the highest average metric inside the window.
 */
export function perfPlot(rows: ResultRow[], opts: PerfPlotOptions = {}): string {
  if (rows.length === 0) throw new Error("no result rows to plot");
  const [wLo, wHi] = opts.bestWindow ?? [2, 45];
  const variants = [...new Set(rows.map((r) => r.variant))];
  const task = rows[0].task;
  const fig = new Figure(760, 480, `${task}: performance vs input length`);
  const lengths = [...new Set(rows.map((r) => r.length))].sort((a, b) => a - b);
  const x = fig.xScale(extent(lengths));
  const y = fig.yScale({ min: 0, max: 1.02 });
  fig.axes(x, y, "input length", "accuracy / hit rate");
  if (opts.memorySlots !== undefined) {
    fig.vline(x.at(opts.memorySlots), "#777777");
  }
  const legend: { label: string; color: string; dashed?: boolean }[] = [];
  variants.forEach((variant, vi) => {
    const color = variantColor(variant, vi);
    const mine = rows.filter((r) => r.variant === variant);
    const byLength = new Map<number, ResultRow[]>();
    const byTrial = new Map<number, ResultRow[]>();
    for (const r of mine) {
      (byLength.get(r.length) ?? byLength.set(r.length, []).get(r.length)!).push(r);
      (byTrial.get(r.trial) ?? byTrial.set(r.trial, []).get(r.trial)!).push(r);
    }
    const medianPoints: [number, number][] = [];
    for (const len of lengths) {
      const at = byLength.get(len);
      if (at) medianPoints.push([x.at(len), y.at(median(at.map((r) => r.metric)))]);
    }
    fig.polyline(medianPoints, color, { cls: `median-${vi}`, width: 2 });
    let bestTrial = -1;
    let bestScore = -Infinity;
    for (const [trial, rs] of byTrial) {
      const windowed = rs.filter((r) => r.length >= wLo && r.length <= wHi);
      if (windowed.length === 0) continue;
      const avg = windowed.reduce((a, r) => a + r.metric, 0) / windowed.length;
      if (avg > bestScore) {
        bestScore = avg;
        bestTrial = trial;
      }
    }
    const bestPoints: [number, number][] = (byTrial.get(bestTrial) ?? [])
      .sort((a, b) => a.length - b.length)
      .map((r) => [x.at(r.length), y.at(r.metric)]);
    fig.polyline(bestPoints, color, { dashed: true, cls: `best-${vi}` });
    legend.push({ label: `${variant} (median)`, color });
    legend.push({ label: `${variant} (best trial)`, color, dashed: true });
  });
  fig.legend(legend);
  return fig.render();
}

/** Deterministic stand-in for Math.random while t-SNE runs. */
function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export interface TsneOptions {
  perplexity?: number;
  iterations?: number;
  seed?: number;
}

/** 2-D embedding of the records' state vectors, one point per record. */
export function embedStates(records: TraceRecord[], opts: TsneOptions = {}): number[][] {
  if (records.length === 0) throw new Error("no records to embed");
  const perplexity = Math.min(opts.perplexity ?? 50, Math.max(1, Math.floor((records.length - 1) / 3)));
  const model = new TSNE({
    dim: 2,
    perplexity,
    earlyExaggeration: 4.0,
    learningRate: 100,
    nIter: opts.iterations ?? 500,
    metric: "euclidean",
  });
  const original = Math.random;
  Math.random = mulberry32(opts.seed ?? 7);
  try {
    model.init({ data: records.map((r) => r.c), type: "dense" });
    model.run();
  } finally {
    Math.random = original;
  }
  return model.getOutput() as number[][];
}

export interface TsnePlotResult {
  svg: string;
  pointCount: number;
}

/**
 * State-space trajectories of one trial: every record becomes one point,
 * consecutive steps of a sample are connected, color runs dark to light
 * along processing time.
 */
export function tsnePlot(
  traces: TraceFile,
  phase: string | null,
  opts: TsneOptions = {},
): TsnePlotResult {
  const records = phase
    ? traces.records.filter((r) => r.phase === phase)
    : traces.records;
  if (records.length === 0) {
    throw new Error(`no trace records${phase ? ` in phase ${phase}` : ""}`);
  }
  const points = embedStates(records, opts);
  const h = traces.header;
  const fig = new Figure(
    640, 640,
    `${h.task}/${h.variant} trial ${h.trial}: cell states${phase ? `, ${phase}` : ""}`,
  );
  const x = fig.xScale(extent(points.map((p) => p[0]), 0.05));
  const y = fig.yScale(extent(points.map((p) => p[1]), 0.05));
  const maxStep = Math.max(...records.map((r) => r.step)) || 1;
  const bySample = new Map<number, { step: number; px: number; py: number }[]>();
  records.forEach((r, i) => {
    const entry = { step: r.step, px: x.at(points[i][0]), py: y.at(points[i][1]) };
    (bySample.get(r.sample) ?? bySample.set(r.sample, []).get(r.sample)!).push(entry);
  });
  for (const pts of bySample.values()) {
    pts.sort((a, b) => a.step - b.step);
    fig.polyline(pts.map((p) => [p.px, p.py]), "rgba(80,120,90,0.25)", { width: 0.8, cls: "trajectory" });
  }
  records.forEach((r, i) => {
    fig.circle(x.at(points[i][0]), y.at(points[i][1]), 2.2, progressColor(r.step / maxStep), "state");
  });
  return { svg: fig.render(), pointCount: records.length };
}

/** Grouped bar chart per (phase, variable) of the attention-mode histograms. */
export function modesPlot(rows: ModeRow[], title = "memory attention modes"): string {
  if (rows.length === 0) throw new Error("no mode histogram rows");
  const groups = new Map<string, ModeRow[]>();
  for (const r of rows) {
    const key = `${r.phase}/${r.variable}`;
    (groups.get(key) ?? groups.set(key, []).get(key)!).push(r);
  }
  const keys = [...groups.keys()];
  const cols = 2;
  const cellW = 360;
  const cellH = 200;
  const rowsN = Math.ceil(keys.length / cols);
  const fig = new Figure(cols * cellW, rowsN * cellH + 30, title);
  keys.forEach((key, idx) => {
    const bars = groups.get(key)!;
    const ox = (idx % cols) * cellW + 45;
    const oy = Math.floor(idx / cols) * cellH + 50;
    const w = cellW - 70;
    const hgt = cellH - 70;
    const maxCount = Math.max(1, ...bars.map((b) => b.count));
    for (const b of bars) {
      if (b.count === 0) continue;
      const bx = ox + b.binLo * w;
      const bw = Math.max(0.5, (b.binHi - b.binLo) * w - 0.5);
      const bh = (b.count / maxCount) * hgt;
      fig.rect(bx, oy + hgt - bh, bw, bh, "#4d8a57");
    }
    fig.text(ox + w / 2, oy + hgt + 16, key, 11, "middle");
    fig.text(ox, oy - 6, `max ${maxCount}`, 10);
  });
  return fig.render();
}
