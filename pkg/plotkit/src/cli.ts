#!/usr/bin/env node
/**
 * plotkit <figure-id> --in <csv...> --out <file> [--log-x] [--log-y]
 *
 * Renders one SVG figure from catapult-lab CSV exports. Inputs are
 * consumed read-only; rendering is deterministic.
 */

import { writeFileSync } from "node:fs";
import { FIGURE_IDS, FigureId, FigureSpec, render } from "./figures.js";

export function parseArgs(argv: string[]): FigureSpec {
  if (argv.length === 0) {
    throw new Error(
      `usage: plotkit <figure-id> --in <csv...> --out <file> [--log-x] [--log-y]\n` +
      `figure ids: ${FIGURE_IDS.join(", ")}`,
    );
  }
  const [id, ...rest] = argv;
  if (!FIGURE_IDS.includes(id as FigureId)) {
    throw new Error(`unknown figure id '${id}'; expected one of ${FIGURE_IDS.join(", ")}`);
  }
  const spec: FigureSpec = { id: id as FigureId, inputs: [], output: "" };
  let mode: "in" | "out" | null = null;
  for (const arg of rest) {
    if (arg === "--in") mode = "in";
    else if (arg === "--out") mode = "out";
    else if (arg === "--log-x") spec.logX = true;
    else if (arg === "--log-y") spec.logY = true;
    else if (arg === "--linear-y") spec.logY = false;
    else if (arg.startsWith("--")) throw new Error(`unknown option '${arg}'`);
    else if (mode === "in") spec.inputs.push(arg);
    else if (mode === "out") spec.output = arg;
    else throw new Error(`unexpected argument '${arg}'`);
  }
  if (spec.inputs.length === 0) throw new Error("--in requires at least one file");
  if (!spec.output) throw new Error("--out requires a path");
  return spec;
}

export function main(argv: string[]): number {
  try {
    const spec = parseArgs(argv);
    const svg = render(spec);
    writeFileSync(spec.output, svg);
    console.log(`wrote ${spec.output}`);
    return 0;
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 1;
  }
}

const isDirect = process.argv[1] && import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "");
if (isDirect) {
  process.exit(main(process.argv.slice(2)));
}
