import { readFileSync } from "fs";

export interface Table {
  header: string[];
  rows: string[][];
}

/** Parse the simple comma-separated artifacts (no quoting in the schemas). */
export function parseCsv(text: string): Table {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    return { header: [], rows: [] };
  }
  const header = lines[0].split(",");
  const rows = lines.slice(1).map((line) => line.split(","));
  return { header, rows };
}

export function readCsv(path: string): Table {
  return parseCsv(readFileSync(path, "utf-8"));
}

export function columnIndex(table: Table, name: string): number {
  const idx = table.header.indexOf(name);
  if (idx < 0) {
    throw new Error(`column ${name} not found in [${table.header.join(", ")}]`);
  }
  return idx;
}

/** Numeric column; empty cells become NaN (masked values in surface.csv). */
export function numericColumn(table: Table, name: string): number[] {
  const idx = columnIndex(table, name);
  return table.rows.map((row) => (row[idx] === "" ? NaN : Number(row[idx])));
}
