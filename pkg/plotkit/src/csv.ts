/**
 * CSV loading for catapult-lab exports.
 *
 * Numeric columns are parsed manually so empty cells (unsampled sharpness)
 * become NaN rather than silently vanishing. Errors always name the
 * offending column and file.
 */

import { readFileSync } from "node:fs";
import Papa from "papaparse";

export interface Table {
  path: string;
  columns: Record<string, string[]>;
  rows: number;
}

export function loadCsv(path: string): Table {
  const text = readFileSync(path, "utf8");
  const parsed = Papa.parse<string[]>(text.trim(), {
    delimiter: ",",
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    throw new Error(`${path}: CSV parse error: ${parsed.errors[0].message}`);
  }
  const data = parsed.data as string[][];
  if (data.length < 1) throw new Error(`${path}: empty CSV`);
  const header = data[0];
  const columns: Record<string, string[]> = {};
  for (const name of header) columns[name] = [];
  for (const row of data.slice(1)) {
    header.forEach((name, i) => columns[name].push(row[i] ?? ""));
  }
  return { path, columns, rows: data.length - 1 };
}

/** Numeric column; empty cells map to NaN. Throws naming missing columns. */
export function numericColumn(table: Table, name: string, minRows = 2): number[] {
  const raw = table.columns[name];
  if (raw === undefined) {
    throw new Error(`${table.path}: missing column '${name}'`);
  }
  if (raw.length < minRows) {
    throw new Error(
      `${table.path}: column '${name}' has ${raw.length} rows, need at least ${minRows}`,
    );
  }
  return raw.map((cell) => (cell === "" ? NaN : Number(cell)));
}

export function hasColumn(table: Table, name: string): boolean {
  return table.columns[name] !== undefined;
}

/** Distinct values in first-appearance order (used to group sweep rows). */
export function distinct(values: number[]): number[] {
  const seen = new Set<number>();
  const out: number[] = [];
  for (const v of values) {
    if (!seen.has(v)) {
      seen.add(v);
      out.push(v);
    }
  }
  return out;
}
