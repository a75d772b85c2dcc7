#!/usr/bin/env node
/**
 * analyze tsne|perf|stats|modes --in <file> [--in ...] --out <path>
 *
 * Consumes the training pipeline's exports (results.csv, traces.jsonl,
 * modes.csv) and produces SVG figures and a pairwise statistics table.
 */

import * as fs from "node:fs";
import * as path from "node:path";
import { parseArgs } from "node:util";

import { readModesCsv, readResultsCsv, readTraces, trialMeans, ResultRow } from "./data";
import { modesPlot, perfPlot, tsnePlot } from "./plots";
import { statsTable } from "./stats";

export interface AnalysisConfig {
  inputs: string[];
  out: string;
  perplexity: number;
  iterations: number;
  seed: number;
  phase: string | null;
  alpha: number;
  minLength: number;
  maxLength: number;
  slots: number | null;
}

function usage(): never {
  console.error(
    "usage: analyze <tsne|perf|stats|modes> --in FILE [--in FILE ...] --out PATH\n" +
      "  tsne   --in traces.jsonl  --out DIR  [--phase encoding|query|decoding] [--perplexity 50] [--iterations 500] [--seed 7]\n" +
      "  perf   --in results.csv   --out DIR  [--slots N]\n" +
      "  stats  --in results.csv   --out FILE [--alpha 0.05] [--min-len 2] [--max-len 45]\n" +
      "  modes  --in modes.csv     --out DIR",
  );
  process.exit(2);
}

export function parseCli(argv: string[]): { command: string; cfg: AnalysisConfig } {
  if (argv.length === 0) usage();
  const command = argv[0];
  if (!["tsne", "perf", "stats", "modes"].includes(command)) usage();
  const { values } = parseArgs({
    args: argv.slice(1),
    options: {
      in: { type: "string", multiple: true },
      out: { type: "string" },
      phase: { type: "string" },
      perplexity: { type: "string" },
      iterations: { type: "string" },
      seed: { type: "string" },
      alpha: { type: "string" },
      "min-len": { type: "string" },
      "max-len": { type: "string" },
      slots: { type: "string" },
    },
  });
  if (!values.in || values.in.length === 0 || !values.out) usage();
  return {
    command,
    cfg: {
      inputs: values.in,
      out: values.out,
      perplexity: Number(values.perplexity ?? 50),
      iterations: Number(values.iterations ?? 500),
      seed: Number(values.seed ?? 7),
      phase: values.phase ?? null,
      alpha: Number(values.alpha ?? 0.05),
      minLength: Number(values["min-len"] ?? 2),
      maxLength: Number(values["max-len"] ?? 45),
      slots: values.slots === undefined ? null : Number(values.slots),
    },
  };
}

function writeFigure(dir: string, name: string, svg: string): string {
  fs.mkdirSync(dir, { recursive: true });
  const file = path.join(dir, name);
  fs.writeFileSync(file, svg);
  return file;
}

function runTsne(cfg: AnalysisConfig): void {
  if (cfg.perplexity <= 0) throw new Error("perplexity must be positive");
  for (const input of cfg.inputs) {
    const traces = readTraces(input);
    const { svg, pointCount } = tsnePlot(traces, cfg.phase, {
      perplexity: cfg.perplexity,
      iterations: cfg.iterations,
      seed: cfg.seed,
    });
    const h = traces.header;
    const phase = cfg.phase ?? "all";
    const name = `tsne_${h.task}_${h.variant.replace(/[^A-Za-z0-9]+/g, "-")}_trial${h.trial}_${phase}.svg`;
    const file = writeFigure(cfg.out, name, svg);
    console.log(`${file}: ${pointCount} states embedded`);
  }
}

function runPerf(cfg: AnalysisConfig): void {
  const rows: ResultRow[] = cfg.inputs.flatMap(readResultsCsv);
  const tasks = [...new Set(rows.map((r) => r.task))];
  for (const task of tasks) {
    const svg = perfPlot(rows.filter((r) => r.task === task), {
      memorySlots: cfg.slots ?? undefined,
      bestWindow: [cfg.minLength, cfg.maxLength],
    });
    const file = writeFigure(cfg.out, `perf_${task}.svg`, svg);
    console.log(file);
  }
}

function runStats(cfg: AnalysisConfig): void {
  const rows = cfg.inputs.flatMap(readResultsCsv);
  const groups = trialMeans(rows, cfg.minLength, cfg.maxLength);
  const table = statsTable(groups, cfg.alpha);
  const header = "variant_a,variant_b,u,p_raw,p_adjusted,significant";
  const lines = table.map(
    (r) =>
      `${r.variantA},${r.variantB},${r.u},${r.pRaw.toExponential(12)},` +
      `${r.pAdjusted.toExponential(12)},${r.significant}`,
  );
  fs.mkdirSync(path.dirname(path.resolve(cfg.out)), { recursive: true });
  fs.writeFileSync(cfg.out, header + "\n" + lines.join("\n") + "\n");
  for (const r of table) {
    const mark = r.significant ? " *" : "";
    console.log(
      `${r.variantA} vs ${r.variantB}: U=${r.u} p=${r.pRaw.toPrecision(3)} ` +
        `adj=${r.pAdjusted.toPrecision(3)}${mark}`,
    );
  }
  console.log(`wrote ${cfg.out}`);
}

function runModes(cfg: AnalysisConfig): void {
  for (const input of cfg.inputs) {
    const rows = readModesCsv(input);
    const base = path.basename(input).replace(/\.[^.]+$/, "");
    const file = writeFigure(cfg.out, `${base}.svg`, modesPlot(rows, base));
    console.log(file);
  }
}

export function main(argv: string[]): number {
  try {
    const { command, cfg } = parseCli(argv);
    if (command === "tsne") runTsne(cfg);
    else if (command === "perf") runPerf(cfg);
    else if (command === "stats") runStats(cfg);
    else runModes(cfg);
    return 0;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
