/**
 * The five figure renderers. Each consumes catapult-lab CSV exports and
 * returns an SVG string; no computation happens here beyond axis transforms
 * and reference overlays.
 *
 *   fig1-sweep-heatline       test loss vs init scale, one line per final
 *                             rate, with the l1/l2 baselines as horizontal
 *                             references (sweep_gd.csv / sweep_phb.csv
 *                             plus baselines.json)
 *   fig1-sharpness-trainloss  sharpness panel with the MSS overlay plus a
 *                             log-scale train-loss panel (trajectory.csv)
 *   fig2-trajectory           parameter-plane trajectories with the
 *                             sqrt(2/eta) symmetry line (4 scenario CSVs)
 *   fig4a-scenarios           sharpness vs step for the four scenarios with
 *                             the MSS overlay (4 scenario CSVs)
 *   fig5-bounds               two panels: both bound coefficients vs
 *                             momentum, and measured vs predicted sharpness
 *                             reduction (beta_sweep.csv)
 */

import { basename } from "node:path";
import { readFileSync } from "node:fs";
import { distinct, hasColumn, loadCsv, numericColumn, Table } from "./csv.js";
import {
  axes,
  COLORS,
  extent,
  hline,
  legend,
  linearScale,
  logScale,
  padExtent,
  PanelBox,
  polyline,
  Scale,
  svgDocument,
  text,
  vline,
} from "./svg.js";

export type FigureId =
  | "fig1-sweep-heatline"
  | "fig1-sharpness-trainloss"
  | "fig2-trajectory"
  | "fig4a-scenarios"
  | "fig5-bounds";

export const FIGURE_IDS: FigureId[] = [
  "fig1-sweep-heatline",
  "fig1-sharpness-trainloss",
  "fig2-trajectory",
  "fig4a-scenarios",
  "fig5-bounds",
];

export interface FigureSpec {
  id: FigureId;
  inputs: string[];
  output: string;
  logX?: boolean;
  logY?: boolean;
}

const W = 760;
const H = 420;
const MSS_STYLE = 'class="ref-mss" stroke="#d62728" stroke-width="1.5" stroke-dasharray="6 4"';
const BASELINE_STYLE = 'class="ref-baseline" stroke="#555" stroke-width="1" stroke-dasharray="4 3"';
const SYMMETRY_STYLE = 'class="ref-symmetry" stroke="#d62728" stroke-width="1.5" stroke-dasharray="6 4"';

function scenarioLabel(path: string): string {
  const stem = basename(path).replace(/\.csv$/, "");
  return stem.replace(/^trajectory_/, "");
}

function makeScale(domain: [number, number], range: [number, number], log: boolean): Scale {
  return log ? logScale(domain, range) : linearScale(domain, range);
}

// ── fig1-sweep-heatline ─────────────────────────────────────────────────

interface Baselines {
  l1: number | null;
  l2: number | null;
}

function readBaselines(path: string): Baselines {
  const payload = JSON.parse(readFileSync(path, "utf8"));
  return {
    l1: typeof payload.l1_test_loss === "number" ? payload.l1_test_loss : null,
    l2: typeof payload.l2_test_loss === "number" ? payload.l2_test_loss : null,
  };
}

function renderSweepHeatline(spec: FigureSpec): string {
  const csvPaths = spec.inputs.filter((p) => p.endsWith(".csv"));
  const jsonPaths = spec.inputs.filter((p) => p.endsWith(".json"));
  if (csvPaths.length === 0) throw new Error("fig1-sweep-heatline needs at least one sweep CSV");
  const baselines: Baselines = jsonPaths.length
    ? readBaselines(jsonPaths[0])
    : { l1: null, l2: null };

  const tables = csvPaths.map(loadCsv);
  const panelW = (W - 120) / tables.length;
  const body: string[] = [];
  tables.forEach((table, pi) => {
    const alphas = numericColumn(table, "alpha");
    const etaFs = numericColumn(table, "eta_f");
    const tests = numericColumn(table, "test_loss");
    const box: PanelBox = { x: 70 + pi * (panelW + 40), y: 40, w: panelW, h: H - 110 };
    const yVals = tests.concat(
      baselines.l1 !== null && baselines.l1 > 0 ? [baselines.l1] : [],
      baselines.l2 !== null ? [baselines.l2] : [],
    );
    const sy = spec.logY === false
      ? linearScale(padExtent(extent(yVals)), [box.y + box.h, box.y])
      : logScale([Math.max(1e-8, extent(yVals)[0]), extent(yVals)[1] * 1.5], [box.y + box.h, box.y]);
    const sx = makeScale(padExtent(extent(alphas)), [box.x, box.x + box.w], spec.logX ?? false);
    const groups = distinct(etaFs);
    const entries: Array<[string, string]> = [];
    groups.forEach((ef, gi) => {
      const xs: number[] = [];
      const ys: number[] = [];
      for (let i = 0; i < alphas.length; i++) {
        if (etaFs[i] === ef) {
          xs.push(alphas[i]);
          ys.push(tests[i]);
        }
      }
      const color = COLORS[gi % COLORS.length];
      body.push(polyline(xs, ys, sx, sy, `stroke="${color}" stroke-width="1.5"`));
      entries.push([`eta_f=${ef}`, color]);
    });
    for (const [value, label] of [
      [baselines.l1, "l1 baseline"],
      [baselines.l2, "l2 baseline"],
    ] as Array<[number | null, string]>) {
      if (value === null || (sy.log && value <= 0)) continue;
      const py = sy(value);
      if (py >= box.y && py <= box.y + box.h) {
        body.push(hline(py, box.x, box.x + box.w, BASELINE_STYLE));
        body.push(text(box.x + box.w - 64, py - 3, label, 'font-size="9" fill="#555"'));
      }
    }
    const title = scenarioLabel(table.path).replace(/^sweep_/, "").toUpperCase();
    body.push(axes(box, sx, sy, "alpha", "test loss", title));
    body.push(legend(box, entries));
  });
  return svgDocument(W, H, body.join("\n"));
}

// ── fig1-sharpness-trainloss ────────────────────────────────────────────

function renderSharpnessTrainloss(spec: FigureSpec): string {
  const table = loadCsv(spec.inputs[0]);
  const t = numericColumn(table, "t");
  const loss = numericColumn(table, "loss");
  const mss = numericColumn(table, "mss");
  const sharp = numericColumn(table, "sharpness");
  const sampled = sharp.some((v) => Number.isFinite(v));
  const body: string[] = [];

  const lossBox: PanelBox = sampled
    ? { x: 70, y: H / 2 + 20, w: W - 140, h: H / 2 - 80 }
    : { x: 70, y: 50, w: W - 140, h: H - 120 };

  if (sampled) {
    const box: PanelBox = { x: 70, y: 30, w: W - 140, h: H / 2 - 60 };
    const finite = sharp.filter((v) => Number.isFinite(v));
    const sy = makeScale(
      padExtent(extent(finite.concat(mss.filter(Number.isFinite)))),
      [box.y + box.h, box.y],
      spec.logY ?? false,
    );
    const sx = makeScale(extent(t), [box.x, box.x + box.w], spec.logX ?? false);
    body.push(polyline(t, mss, sx, sy, MSS_STYLE));
    body.push(polyline(t, sharp, sx, sy, `stroke="${COLORS[0]}" stroke-width="1.5"`));
    body.push(axes(box, sx, sy, "step", "sharpness", "sharpness vs stability threshold"));
    body.push(legend(box, [["sharpness", COLORS[0]], ["MSS", "#d62728"]]));
  } else {
    body.push(
      text(70, 24, "sharpness panel omitted: no sharpness samples in input", 'font-size="11" fill="#a00"'),
    );
  }

  const pos = loss.filter((v) => Number.isFinite(v) && v > 0);
  const sy2 = logScale([extent(pos)[0], extent(pos)[1] * 2], [lossBox.y + lossBox.h, lossBox.y]);
  const sx2 = makeScale(extent(t), [lossBox.x, lossBox.x + lossBox.w], spec.logX ?? false);
  body.push(polyline(t, loss, sx2, sy2, `stroke="${COLORS[1]}" stroke-width="1.2"`));
  body.push(axes(lossBox, sx2, sy2, "step", "train loss", "training loss"));
  return svgDocument(W, H, body.join("\n"));
}

// ── fig2-trajectory ─────────────────────────────────────────────────────

function renderTrajectory(spec: FigureSpec): string {
  if (spec.inputs.length < 1) throw new Error("fig2-trajectory needs scenario CSVs");
  const tables = spec.inputs.map(loadCsv);
  const box: PanelBox = { x: 70, y: 40, w: W - 160, h: H - 110 };
  const xsAll: number[] = [];
  const ysAll: number[] = [];
  const series = tables.map((table) => {
    const u = numericColumn(table, "p_1");
    const v = numericColumn(table, "p_2");
    xsAll.push(...u);
    ysAll.push(...v);
    return { label: scenarioLabel(table.path), u, v };
  });
  // symmetry line at sqrt(2/eta) = sqrt(MSS), shared across matched runs
  const mss0 = numericColumn(tables[0], "mss")[0];
  const symmetry = Math.sqrt(mss0);
  xsAll.push(symmetry);
  const sx = makeScale(padExtent(extent(xsAll)), [box.x, box.x + box.w], spec.logX ?? false);
  const sy = makeScale(padExtent(extent(ysAll)), [box.y + box.h, box.y], false);
  const body: string[] = [];
  const entries: Array<[string, string]> = [];
  series.forEach((s, i) => {
    const color = COLORS[i % COLORS.length];
    body.push(polyline(s.u, s.v, sx, sy, `stroke="${color}" stroke-width="1.2"`));
    entries.push([s.label, color]);
  });
  body.push(vline(sx(symmetry), box.y, box.y + box.h, SYMMETRY_STYLE));
  body.push(text(sx(symmetry) + 4, box.y + 14, "sqrt(2/eta)", 'font-size="10" fill="#d62728"'));
  body.push(axes(box, sx, sy, "u", "v", "parameter-plane trajectories"));
  body.push(legend(box, entries));
  return svgDocument(W, H, body.join("\n"));
}

// ── fig4a-scenarios ─────────────────────────────────────────────────────

function renderScenarios(spec: FigureSpec): string {
  if (spec.inputs.length < 1) throw new Error("fig4a-scenarios needs scenario CSVs");
  const tables = spec.inputs.map(loadCsv);
  const box: PanelBox = { x: 70, y: 40, w: W - 160, h: H - 110 };
  const allSharp: number[] = [];
  const allT: number[] = [];
  const series = tables.map((table) => {
    const t = numericColumn(table, "t");
    const sharp = numericColumn(table, "sharpness");
    if (!sharp.some(Number.isFinite)) {
      throw new Error(`${table.path}: column 'sharpness' has no samples`);
    }
    allT.push(...t);
    allSharp.push(...sharp.filter(Number.isFinite));
    return { label: scenarioLabel(table.path), t, sharp };
  });
  const mssT = numericColumn(tables[0], "t");
  const mss = numericColumn(tables[0], "mss");
  allSharp.push(...mss.filter(Number.isFinite));
  const sx = makeScale(extent(allT), [box.x, box.x + box.w], spec.logX ?? false);
  const sy = makeScale(padExtent(extent(allSharp)), [box.y + box.h, box.y], spec.logY ?? false);
  const body: string[] = [];
  const entries: Array<[string, string]> = [];
  series.forEach((s, i) => {
    const color = COLORS[i % COLORS.length];
    body.push(polyline(s.t, s.sharp, sx, sy, `stroke="${color}" stroke-width="1.3"`));
    entries.push([s.label, color]);
  });
  body.push(polyline(mssT, mss, sx, sy, MSS_STYLE));
  entries.push(["MSS", "#d62728"]);
  body.push(axes(box, sx, sy, "step", "sharpness", "sharpness by scenario"));
  body.push(legend(box, entries));
  return svgDocument(W, H, body.join("\n"));
}

// ── fig5-bounds ─────────────────────────────────────────────────────────

function renderBounds(spec: FigureSpec): string {
  const table = loadCsv(spec.inputs[0]);
  const beta = numericColumn(table, "beta");
  const cu = numericColumn(table, "C_u");
  const inv = numericColumn(table, "inv_factor");
  const measured = numericColumn(table, "delta_s_measured");
  const bound = numericColumn(table, "delta_s_bound");
  const body: string[] = [];

  const left: PanelBox = { x: 70, y: 40, w: (W - 180) / 2, h: H - 110 };
  const sxL = linearScale(padExtent(extent(beta)), [left.x, left.x + left.w]);
  const syCu = linearScale(padExtent(extent(cu)), [left.y + left.h, left.y]);
  const syInv = linearScale(padExtent(extent(inv)), [left.y + left.h, left.y]);
  body.push(polyline(beta, cu, sxL, syCu, `stroke="${COLORS[0]}" stroke-width="1.5"`));
  body.push(polyline(beta, inv, sxL, syInv, `stroke="${COLORS[1]}" stroke-width="1.5"`));
  body.push(axes(left, sxL, syCu, "beta", "C_u", "bound coefficients"));
  // right-hand tick labels for the second series' scale
  for (const tick of syInv.ticks()) {
    const py = syInv(tick);
    if (py >= left.y && py <= left.y + left.h) {
      body.push(text(left.x + left.w + 6, py + 3, String(Number(tick.toPrecision(3))), 'font-size="9" fill="#ff7f0e"'));
    }
  }
  body.push(legend(left, [["C_u", COLORS[0]], ["1/(1+eta C_v)", COLORS[1]]]));

  const right: PanelBox = { x: left.x + left.w + 90, y: 40, w: (W - 180) / 2, h: H - 110 };
  const sxR = linearScale(padExtent(extent(beta)), [right.x, right.x + right.w]);
  const pos = measured.concat(bound).filter((v) => Number.isFinite(v) && v > 0);
  const syR = spec.logY === false
    ? linearScale(padExtent(extent(measured.concat(bound))), [right.y + right.h, right.y])
    : logScale([extent(pos)[0], extent(pos)[1] * 1.5], [right.y + right.h, right.y]);
  body.push(polyline(beta, measured, sxR, syR, `stroke="${COLORS[2]}" stroke-width="1.5"`));
  body.push(polyline(beta, bound, sxR, syR, `stroke="${COLORS[3]}" stroke-width="1.5" stroke-dasharray="5 3"`));
  body.push(axes(right, sxR, syR, "beta", "sharpness reduction", "measured vs predicted"));
  body.push(legend(right, [["measured", COLORS[2]], ["bound", COLORS[3]]]));
  return svgDocument(W, H, body.join("\n"));
}

// ── dispatch ────────────────────────────────────────────────────────────

export function render(spec: FigureSpec): string {
  if (spec.inputs.length === 0) throw new Error(`${spec.id}: no input files given`);
  switch (spec.id) {
    case "fig1-sweep-heatline":
      return renderSweepHeatline(spec);
    case "fig1-sharpness-trainloss":
      return renderSharpnessTrainloss(spec);
    case "fig2-trajectory":
      return renderTrajectory(spec);
    case "fig4a-scenarios":
      return renderScenarios(spec);
    case "fig5-bounds":
      return renderBounds(spec);
    default:
      throw new Error(`unknown figure id '${(spec as FigureSpec).id}'`);
  }
}
