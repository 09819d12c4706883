import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";
import { distinct, loadCsv, numericColumn } from "../src/csv.js";

function tempCsv(content: string): string {
  const dir = mkdtempSync(join(tmpdir(), "plotkit-"));
  const path = join(dir, "t.csv");
  writeFileSync(path, content);
  return path;
}

describe("csv loading", () => {
  it("parses columns by header", () => {
    const path = tempCsv("a,b\n1,2\n3,4\n");
    const table = loadCsv(path);
    expect(numericColumn(table, "a")).toEqual([1, 3]);
    expect(numericColumn(table, "b")).toEqual([2, 4]);
    expect(table.rows).toBe(2);
  });

  it("maps empty cells to NaN", () => {
    const path = tempCsv("t,sharpness\n0,100\n1,\n2,80\n");
    const table = loadCsv(path);
    const col = numericColumn(table, "sharpness");
    expect(col[0]).toBe(100);
    expect(Number.isNaN(col[1])).toBe(true);
    expect(col[2]).toBe(80);
  });

  it("errors name the missing column and file", () => {
    const path = tempCsv("a\n1\n2\n");
    const table = loadCsv(path);
    expect(() => numericColumn(table, "sharpness")).toThrow(/sharpness/);
    expect(() => numericColumn(table, "sharpness")).toThrow(path);
  });

  it("errors name short columns", () => {
    const path = tempCsv("a\n1\n");
    const table = loadCsv(path);
    expect(() => numericColumn(table, "a")).toThrow(/has 1 rows, need at least 2/);
  });

  it("distinct preserves first-appearance order", () => {
    expect(distinct([3, 1, 3, 2, 1])).toEqual([3, 1, 2]);
  });
});
