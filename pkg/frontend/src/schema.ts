/**
 * Readers for msconstrain output bundles.
 *
 * A run bundle is a directory with metadata.json, diagnostics.csv and
 * snapshots/snap_NNNNNN.csv; a convergence bundle carries errors.csv.
 * Parsers validate shape up front so figure code can assume clean data.
 */

import { readFileSync } from "fs";
import { join } from "path";
import Papa from "papaparse";
import { z } from "zod";

export const SNAPSHOT_MAGIC = "# msconstrain snapshot v1";
export const BUNDLE_FORMAT = "msconstrain-bundle v1";

const gridSchema = z.object({
  shape: z.array(z.number().int().positive()),
  lengths: z.array(z.number()),
  boundaries: z.array(z.string()),
  origins: z.array(z.number()),
  spacings: z.array(z.number()),
});

export const metadataSchema = z.object({
  format: z.literal(BUNDLE_FORMAT),
  tool_version: z.string(),
  experiment: z.string(),
  kind: z.string().optional(),
  grid: gridSchema.optional(),
  dt: z.number().optional(),
  courant: z.number().optional(),
  analysis: z.record(z.string(), z.unknown()).default({}),
  files: z.record(z.string(), z.unknown()),
  status: z.string().optional(),
});

export type Metadata = z.infer<typeof metadataSchema>;
export type Grid = z.infer<typeof gridSchema>;

export class BundleError extends Error {}

export function readMetadata(bundleDir: string): Metadata {
  let raw: string;
  try {
    raw = readFileSync(join(bundleDir, "metadata.json"), "utf-8");
  } catch (err) {
    throw new BundleError(`cannot read metadata in ${bundleDir}: ${err}`);
  }
  const parsed = metadataSchema.safeParse(JSON.parse(raw));
  if (!parsed.success) {
    throw new BundleError(`${bundleDir}: metadata does not match the bundle schema: ${parsed.error.message}`);
  }
  return parsed.data;
}

export interface Table {
  columns: string[];
  rows: number[][];
}

function parseNumericCsv(text: string, context: string): Table {
  const result = Papa.parse<string[]>(text.trim(), { skipEmptyLines: true });
  if (result.errors.length > 0) {
    throw new BundleError(`${context}: CSV parse error: ${result.errors[0].message}`);
  }
  const data = result.data;
  if (data.length < 2) {
    throw new BundleError(`${context}: empty table`);
  }
  const columns = data[0];
  const rows = data.slice(1).map((cells, i) => {
    if (cells.length !== columns.length) {
      throw new BundleError(`${context}: row ${i + 1} has ${cells.length} cells, expected ${columns.length}`);
    }
    return cells.map(Number);
  });
  if (rows.some((r) => r.some((v) => Number.isNaN(v)))) {
    throw new BundleError(`${context}: non-numeric cell`);
  }
  return { columns, rows };
}

export function column(table: Table, name: string, context: string): number[] {
  const idx = table.columns.indexOf(name);
  if (idx < 0) {
    throw new BundleError(`${context}: missing column '${name}' (have ${table.columns.join(",")})`);
  }
  return table.rows.map((r) => r[idx]);
}

export function readDiagnostics(bundleDir: string): Table {
  const path = join(bundleDir, "diagnostics.csv");
  let text: string;
  try {
    text = readFileSync(path, "utf-8");
  } catch (err) {
    throw new BundleError(`cannot read ${path}: ${err}`);
  }
  return parseNumericCsv(text, path);
}

export function readErrorsTable(bundleDir: string): Table {
  const path = join(bundleDir, "errors.csv");
  let text: string;
  try {
    text = readFileSync(path, "utf-8");
  } catch (err) {
    throw new BundleError(`cannot read ${path}: ${err}`);
  }
  return parseNumericCsv(text, path);
}

export interface Snapshot {
  time: number;
  columns: string[];
  /** node coordinates, one or two columns */
  coords: number[][];
  /** ambient components u0..u{d-1} per node */
  values: number[][];
}

export function readSnapshot(path: string): Snapshot {
  let text: string;
  try {
    text = readFileSync(path, "utf-8");
  } catch (err) {
    throw new BundleError(`cannot read ${path}: ${err}`);
  }
  const lines = text.split("\n");
  if (lines[0].trim() !== SNAPSHOT_MAGIC) {
    throw new BundleError(`${path}: not a snapshot file (got '${lines[0]}')`);
  }
  const timeMatch = lines[1].match(/^# time (.+)$/);
  if (!timeMatch) {
    throw new BundleError(`${path}: missing time comment`);
  }
  const table = parseNumericCsv(lines.slice(2).join("\n"), path);
  const nCoord = table.columns.filter((c) => c === "x" || c === "y").length;
  return {
    time: Number(timeMatch[1]),
    columns: table.columns,
    coords: table.rows.map((r) => r.slice(1, 1 + nCoord)),
    values: table.rows.map((r) => r.slice(1 + nCoord)),
  };
}

export function snapshotPaths(bundleDir: string, meta: Metadata): string[] {
  const files = meta.files as { snapshots?: string[] };
  const names = files.snapshots ?? [];
  const csv = names.filter((n) => n.endsWith(".csv"));
  if (csv.length === 0) {
    throw new BundleError(`${bundleDir}: bundle has no CSV snapshots`);
  }
  return csv.map((n) => join(bundleDir, n));
}

/** Evenly spaced selection including both endpoints. */
export function spacedIndices(n: number, want: number): number[] {
  if (n <= want) return Array.from({ length: n }, (_, i) => i);
  const out: number[] = [];
  for (let i = 0; i < want; i++) {
    out.push(Math.round((i * (n - 1)) / (want - 1)));
  }
  return [...new Set(out)];
}
