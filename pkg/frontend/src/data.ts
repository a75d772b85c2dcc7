/**
 * Readers for the primary component's export formats: results.csv,
 * traces.jsonl (schema-headed JSON lines), and modes.csv.
 */

import * as fs from "node:fs";

export interface ResultRow {
  task: string;
  variant: string;
  trial: number;
  length: number;
  metric: number;
  n: number;
}

/** Simple comma-separated values, no quoting (none of our writers quote). */
function splitCsv(text: string): string[][] {
  return text
    .split(/\r?\n/)
    .filter((line) => line.length > 0 && !line.startsWith("#"))
    .map((line) => line.split(","));
}

export function readResultsCsv(path: string): ResultRow[] {
  const rows = splitCsv(fs.readFileSync(path, "utf-8"));
  const header = rows[0];
  const expected = ["task", "variant", "trial", "length", "metric", "n"];
  if (header.join(",") !== expected.join(",")) {
    throw new Error(`${path}: unexpected results header ${header.join(",")}`);
  }
  return rows.slice(1).map((cells) => ({
    task: cells[0],
    variant: cells[1],
    trial: Number(cells[2]),
    length: Number(cells[3]),
    metric: Number(cells[4]),
    n: Number(cells[5]),
  }));
}

export interface TraceHeader {
  schema: string;
  version: number;
  trial: number;
  task: string;
  variant: string;
  n_in: number;
  n_samples: number;
  hidden_size: number;
}

export interface TraceRecord {
  trial: number;
  sample: number;
  step: number;
  phase: string;
  c: number[];
  g_a: number;
  pi_content: number[];
}

export interface TraceFile {
  header: TraceHeader;
  records: TraceRecord[];
}

export function readTraces(path: string): TraceFile {
  const lines = fs
    .readFileSync(path, "utf-8")
    .split(/\r?\n/)
    .filter((l) => l.length > 0);
  if (lines.length === 0) throw new Error(`${path}: empty trace file`);
  const header = JSON.parse(lines[0]) as TraceHeader;
  if (header.schema !== "dnclab.traces") {
    throw new Error(`${path}: not a dnclab trace file (schema ${header.schema})`);
  }
  const records = lines.slice(1).map((l) => JSON.parse(l) as TraceRecord);
  return { header, records };
}

export interface ModeRow {
  phase: string;
  variable: string;
  binLo: number;
  binHi: number;
  count: number;
}

export function readModesCsv(path: string): ModeRow[] {
  const raw = fs.readFileSync(path, "utf-8");
  if (!raw.startsWith("# schema=dnclab.modes.v1")) {
    throw new Error(`${path}: missing dnclab.modes schema header`);
  }
  const rows = splitCsv(raw);
  if (rows[0].join(",") !== "phase,variable,bin_lo,bin_hi,count") {
    throw new Error(`${path}: unexpected modes header`);
  }
  return rows.slice(1).map((cells) => ({
    phase: cells[0],
    variable: cells[1],
    binLo: Number(cells[2]),
    binHi: Number(cells[3]),
    count: Number(cells[4]),
  }));
}

/** Per-trial mean metric over the length window (inclusive). */
export function trialMeans(
  rows: ResultRow[],
  minLength: number,
  maxLength: number,
): Map<string, number[]> {
  const byVariantTrial = new Map<string, Map<number, number[]>>();
  for (const row of rows) {
    if (row.length < minLength || row.length > maxLength) continue;
    let trials = byVariantTrial.get(row.variant);
    if (!trials) {
      trials = new Map();
      byVariantTrial.set(row.variant, trials);
    }
    let metrics = trials.get(row.trial);
    if (!metrics) {
      metrics = [];
      trials.set(row.trial, metrics);
    }
    metrics.push(row.metric);
  }
  const out = new Map<string, number[]>();
  for (const [variant, trials] of byVariantTrial) {
    const means = [...trials.entries()]
      .sort((a, b) => a[0] - b[0])
      .map(([, metrics]) => metrics.reduce((a, b) => a + b, 0) / metrics.length);
    out.set(variant, means);
  }
  return out;
}
