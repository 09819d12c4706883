/**
 * Minimal SVG chart primitives: scales, axes, polylines, reference lines.
 * No DOM, no randomness; identical input produces byte-identical output.
 */

export interface Scale {
  (x: number): number;
  domain: [number, number];
  range: [number, number];
  log: boolean;
  ticks(): number[];
}

const FMT = (x: number): string => {
  if (!Number.isFinite(x)) return "";
  if (x === 0) return "0";
  const ax = Math.abs(x);
  if (ax >= 1e4 || ax < 1e-3) return x.toExponential(1).replace("e+", "e");
  return String(Number(x.toPrecision(4)));
};

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const fn = ((x: number) => r0 + ((x - d0) / span) * (r1 - r0)) as Scale;
  fn.domain = domain;
  fn.range = range;
  fn.log = false;
  fn.ticks = () => {
    const step = niceStep(span / 5);
    const start = Math.ceil(d0 / step) * step;
    const out: number[] = [];
    for (let v = start; v <= d1 + 1e-12 * Math.abs(span); v += step) out.push(Number(v.toPrecision(12)));
    return out;
  };
  return fn;
}

export function logScale(domain: [number, number], range: [number, number]): Scale {
  const lo = Math.max(domain[0], 1e-300);
  const hi = Math.max(domain[1], lo * 10);
  const [r0, r1] = range;
  const l0 = Math.log10(lo);
  const l1 = Math.log10(hi);
  const fn = ((x: number) =>
    r0 + ((Math.log10(Math.max(x, 1e-300)) - l0) / (l1 - l0 || 1)) * (r1 - r0)) as Scale;
  fn.domain = [lo, hi];
  fn.range = range;
  fn.log = true;
  fn.ticks = () => {
    const out: number[] = [];
    const stride = Math.max(1, Math.round((Math.ceil(l1) - Math.floor(l0)) / 6));
    for (let e = Math.ceil(l0); e <= Math.floor(l1); e += stride) out.push(10 ** e);
    if (out.length === 0) out.push(lo, hi);
    return out;
  };
  return fn;
}

function niceStep(raw: number): number {
  const mag = 10 ** Math.floor(Math.log10(Math.abs(raw) || 1));
  const norm = raw / mag;
  const nice = norm <= 1 ? 1 : norm <= 2 ? 2 : norm <= 5 ? 5 : 10;
  return nice * mag;
}

export function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (!Number.isFinite(v)) continue;
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (lo === Infinity) return [0, 1];
  if (lo === hi) return [lo - 0.5, hi + 0.5];
  return [lo, hi];
}

export function padExtent([lo, hi]: [number, number], frac = 0.05): [number, number] {
  const pad = (hi - lo) * frac;
  return [lo - pad, hi + pad];
}

// ── element emitters ────────────────────────────────────────────────────

const esc = (s: string) => s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");

export function polyline(
  xs: number[],
  ys: number[],
  sx: Scale,
  sy: Scale,
  attrs: string,
): string {
  const pts: string[] = [];
  for (let i = 0; i < xs.length; i++) {
    if (!Number.isFinite(xs[i]) || !Number.isFinite(ys[i])) continue;
    pts.push(`${sx(xs[i]).toFixed(2)},${sy(ys[i]).toFixed(2)}`);
  }
  return `<polyline fill="none" points="${pts.join(" ")}" ${attrs}/>`;
}

export function text(x: number, y: number, s: string, attrs = ""): string {
  return `<text x="${x.toFixed(1)}" y="${y.toFixed(1)}" font-family="sans-serif" ${attrs}>${esc(s)}</text>`;
}

export function hline(y: number, x0: number, x1: number, attrs: string): string {
  return `<line x1="${x0.toFixed(1)}" y1="${y.toFixed(1)}" x2="${x1.toFixed(1)}" y2="${y.toFixed(1)}" ${attrs}/>`;
}

export function vline(x: number, y0: number, y1: number, attrs: string): string {
  return `<line x1="${x.toFixed(1)}" y1="${y0.toFixed(1)}" x2="${x.toFixed(1)}" y2="${y1.toFixed(1)}" ${attrs}/>`;
}

export interface PanelBox {
  x: number;
  y: number;
  w: number;
  h: number;
}

/** Axis frame with tick labels; returns SVG fragments. */
export function axes(box: PanelBox, sx: Scale, sy: Scale, xlab: string, ylab: string, title = ""): string {
  const parts: string[] = [];
  parts.push(
    `<rect x="${box.x}" y="${box.y}" width="${box.w}" height="${box.h}" fill="none" stroke="#333" stroke-width="1"/>`,
  );
  for (const t of sx.ticks()) {
    const px = sx(t);
    if (px < box.x - 0.5 || px > box.x + box.w + 0.5) continue;
    parts.push(vline(px, box.y + box.h, box.y + box.h + 4, 'stroke="#333"'));
    parts.push(text(px - 10, box.y + box.h + 16, FMT(t), 'font-size="10"'));
  }
  for (const t of sy.ticks()) {
    const py = sy(t);
    if (py < box.y - 0.5 || py > box.y + box.h + 0.5) continue;
    parts.push(hline(py, box.x - 4, box.x, 'stroke="#333"'));
    parts.push(text(box.x - 42, py + 3, FMT(t), 'font-size="10"'));
  }
  parts.push(text(box.x + box.w / 2 - 14, box.y + box.h + 30, xlab, 'font-size="11"'));
  parts.push(
    text(box.x - 46, box.y - 8, ylab, 'font-size="11"'),
  );
  if (title) parts.push(text(box.x + 4, box.y - 8, title, 'font-size="12" font-weight="bold"'));
  return parts.join("\n");
}

export function legend(box: PanelBox, entries: Array<[string, string]>): string {
  const parts: string[] = [];
  entries.forEach(([label, color], i) => {
    const y = box.y + 14 + 14 * i;
    const x = box.x + box.w - 110;
    parts.push(hline(y - 3, x, x + 16, `stroke="${color}" stroke-width="2"`));
    parts.push(text(x + 20, y, label, 'font-size="10"'));
  });
  return parts.join("\n");
}

export function svgDocument(width: number, height: number, body: string): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}">\n<rect width="100%" height="100%" fill="white"/>\n` +
    body +
    "\n</svg>\n"
  );
}

export const COLORS = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];
