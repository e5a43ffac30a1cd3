/**
 * Figure renderers over msconstrain bundles.
 *
 * Rendering is read-only: no numerical recomputation beyond least-squares
 * fits and the documented projections (orthographic view for sphere
 * snapshots, (x/(1+z), y/(1+z)) for the Poincare disk).
 */

import { z } from "zod";
import {
  BundleError,
  Metadata,
  Snapshot,
  column,
  readDiagnostics,
  readErrorsTable,
  readMetadata,
  readSnapshot,
  snapshotPaths,
  spacedIndices,
} from "./schema.js";
import {
  Svg,
  decadeTicks,
  divergingColor,
  drawAxes,
  extent,
  fmt,
  linearScale,
  logScale,
  ticks,
} from "./svg.js";

export const FIGURE_KINDS = [
  "loglog-error",
  "energy-trace",
  "sphere-snapshots",
  "disk-snapshots",
  "radius-time-heatmap",
  "amplitude-trace",
] as const;

export const jobSchema = z.object({
  kind: z.enum(FIGURE_KINDS),
  inputs: z.array(z.string()).min(1),
  output: z.string(),
  options: z
    .object({
      panels: z.number().int().positive().max(16).optional(),
      title: z.string().optional(),
    })
    .default({}),
});

export type FigureJob = z.infer<typeof jobSchema>;

const W = 640;
const H = 440;
const BOX = { x0: 70, y0: 30, x1: W - 25, y1: H - 55 };

function leastSquares(xs: number[], ys: number[]): { slope: number; intercept: number } {
  const n = xs.length;
  const mx = xs.reduce((a, b) => a + b, 0) / n;
  const my = ys.reduce((a, b) => a + b, 0) / n;
  let num = 0;
  let den = 0;
  for (let i = 0; i < n; i++) {
    num += (xs[i] - mx) * (ys[i] - my);
    den += (xs[i] - mx) * (xs[i] - mx);
  }
  return { slope: num / den, intercept: my - (num / den) * mx };
}

export function renderLoglogError(bundleDir: string, title?: string): string {
  const meta = readMetadata(bundleDir);
  const table = readErrorsTable(bundleDir);
  const ns = column(table, "n", bundleDir);
  const errors = column(table, "error", bundleDir);
  if (errors.some((e) => e <= 0)) {
    throw new BundleError(`${bundleDir}: errors must be positive for a log plot`);
  }
  const slopeMeta = (meta.analysis as Record<string, unknown>)["slope"];
  const slope =
    typeof slopeMeta === "number"
      ? slopeMeta
      : -leastSquares(ns.map(Math.log10), errors.map(Math.log10)).slope;

  const svg = new Svg(W, H);
  const [nLo, nHi] = [Math.min(...ns) / 1.2, Math.max(...ns) * 1.2];
  const [eLo, eHi] = [Math.min(...errors) / 2, Math.max(...errors) * 2];
  const x = logScale(nLo, nHi, BOX.x0, BOX.x1);
  const y = logScale(eLo, eHi, BOX.y1, BOX.y0);
  drawAxes(svg, {
    x, y,
    xTicks: decadeTicks(nLo, nHi).concat(ns),
    yTicks: decadeTicks(eLo, eHi),
    box: BOX,
    xLabel: "N (points per axis)",
    yLabel: "max-in-time L2 error",
    title: title ?? `${meta.experiment}: convergence order`,
  });

  // fitted power law through the data's log-log centroid
  const fit = leastSquares(ns.map(Math.log10), errors.map(Math.log10));
  const linePts: Array<[number, number]> = [nLo * 1.2, nHi / 1.2].map((n) => {
    const e = Math.pow(10, fit.intercept + fit.slope * Math.log10(n));
    return [x(n), y(e)] as [number, number];
  });
  svg.polyline(linePts, "#999", 1.5);
  svg.polyline(ns.map((n, i) => [x(n), y(errors[i])] as [number, number]), "#1f77b4", 1.2);
  ns.forEach((n, i) => svg.circle(x(n), y(errors[i]), 3.5));
  svg.text(BOX.x0 + 12, BOX.y0 + 18, `fitted slope ≈ ${slope.toFixed(2)}`, 12);
  return svg.render();
}

function relativeEnergy(bundleDir: string): { t: number[]; rel: number[]; e0: number } {
  const table = readDiagnostics(bundleDir);
  const t = column(table, "time", bundleDir);
  const e = column(table, "energy", bundleDir);
  if (e[0] === 0) {
    throw new BundleError(`${bundleDir}: initial energy is zero; relative trace undefined`);
  }
  return { t, rel: e.map((v) => (v - e[0]) / Math.abs(e[0])), e0: e[0] };
}

export function renderEnergyTrace(bundleDir: string, title?: string): string {
  const meta = readMetadata(bundleDir);
  const { t, rel, e0 } = relativeEnergy(bundleDir);
  const svg = new Svg(W, H);
  const [rLo, rHi] = extent(rel);
  const pad = (rHi - rLo) * 0.1 || 1e-6;
  const x = linearScale(t[0], t[t.length - 1], BOX.x0, BOX.x1);
  const y = linearScale(rLo - pad, rHi + pad, BOX.y1, BOX.y0);
  drawAxes(svg, {
    x, y,
    xTicks: ticks(t[0], t[t.length - 1]),
    yTicks: ticks(rLo - pad, rHi + pad),
    box: BOX,
    xLabel: "time",
    yLabel: "(E - E0) / E0",
    title: title ?? `${meta.experiment}: relative energy error (E0 = ${e0.toPrecision(4)})`,
  });
  if (rLo <= 0 && rHi >= 0) {
    svg.line(BOX.x0, y(0), BOX.x1, y(0), "#aaa", 1, "4 3");
  }
  svg.polyline(t.map((tt, i) => [x(tt), y(rel[i])] as [number, number]));
  return svg.render();
}

function requireComponents(snap: Snapshot, n: number, context: string): void {
  if (snap.values[0].length !== n) {
    throw new BundleError(
      `${context}: expected ${n}-component field, got ${snap.values[0].length}`,
    );
  }
}

/** Orthographic view after azimuth/elevation rotation; returns [sx, sy, depth]. */
function project3d(p: number[]): [number, number, number] {
  const az = (-35 * Math.PI) / 180;
  const el = (22 * Math.PI) / 180;
  const ca = Math.cos(az), sa = Math.sin(az);
  const ce = Math.cos(el), se = Math.sin(el);
  const x1 = ca * p[0] + sa * p[1];
  const y1 = -sa * p[0] + ca * p[1];
  const z1 = p[2];
  return [x1, ce * z1 - se * y1, ce * y1 + se * z1];
}

function panelGrid(count: number): { cols: number; rows: number; side: number } {
  const cols = Math.min(4, Math.max(1, count));
  const rows = Math.ceil(count / cols);
  return { cols, rows, side: 190 };
}

function renderPanels(
  bundleDir: string,
  mapPoint: (p: number[]) => [number, number],
  outline: boolean,
  panels: number,
  title: string,
  colorComp: number,
): string {
  const meta = readMetadata(bundleDir);
  const paths = snapshotPaths(bundleDir, meta);
  const picks = spacedIndices(paths.length, panels);
  const { cols, rows, side } = panelGrid(picks.length);
  const width = cols * side + 20;
  const height = rows * side + 50;
  const svg = new Svg(width, height);
  svg.text(width / 2, 22, title, 13, "middle");

  const is1d = (meta.grid?.shape.length ?? 1) === 1;
  picks.forEach((pick, k) => {
    const snap = readSnapshot(paths[pick]);
    requireComponents(snap, 3, paths[pick]);
    const cx = 10 + (k % cols) * side + side / 2;
    const cy = 35 + Math.floor(k / cols) * side + side / 2;
    const r = side / 2 - 18;
    if (outline) {
      svg.raw(
        `<circle cx="${fmt(cx)}" cy="${fmt(cy)}" r="${fmt(r)}" fill="none" ` +
          `stroke="#bbb" stroke-width="1"/>`,
      );
    }
    const pts = snap.values.map((v) => {
      const [px, py] = mapPoint(v);
      return [cx + px * r, cy - py * r] as [number, number];
    });
    if (is1d && pts.length > 1) {
      svg.polyline([...pts, pts[0]], "#888", 0.8);
    }
    snap.values.forEach((v, i) => {
      svg.circle(pts[i][0], pts[i][1], 1.6, divergingColor(v[colorComp]));
    });
    svg.text(cx, cy + r + 14, `t = ${snap.time.toPrecision(4)}`, 10, "middle");
  });
  return svg.render();
}

export function renderSphereSnapshots(bundleDir: string, panels: number, title?: string): string {
  const meta = readMetadata(bundleDir);
  return renderPanels(
    bundleDir,
    (p) => {
      const [sx, sy] = project3d(p);
      return [sx, sy];
    },
    true,
    panels,
    title ?? `${meta.experiment}: sphere snapshots`,
    2,
  );
}

export function renderDiskSnapshots(bundleDir: string, panels: number, title?: string): string {
  const meta = readMetadata(bundleDir);
  return renderPanels(
    bundleDir,
    (p) => {
      if (p[2] <= 0) {
        throw new BundleError(`${bundleDir}: point not on the upper hyperboloid sheet`);
      }
      return [p[0] / (1 + p[2]), p[1] / (1 + p[2])];
    },
    true,
    panels,
    title ?? `${meta.experiment}: Poincare disk snapshots`,
    2,
  );
}

export function renderRadiusTimeHeatmap(bundleDir: string, title?: string): string {
  const meta = readMetadata(bundleDir);
  if (!meta.grid || meta.grid.shape.length !== 2) {
    throw new BundleError(`${bundleDir}: radius-time heatmap needs a 2D-grid bundle`);
  }
  const [n1, n2] = meta.grid.shape;
  const paths = snapshotPaths(bundleDir, meta);
  const snaps = paths.map(readSnapshot);
  requireComponents(snaps[0], 3, paths[0]);

  const coord = (axis: number, i: number) =>
    meta.grid!.origins[axis] + i * meta.grid!.spacings[axis];
  let iCenter = 0;
  for (let i = 1; i < n1; i++) {
    if (Math.abs(coord(0, i)) < Math.abs(coord(0, iCenter))) iCenter = i;
  }
  let jCenter = 0;
  for (let j = 1; j < n2; j++) {
    if (Math.abs(coord(1, j)) < Math.abs(coord(1, jCenter))) jCenter = j;
  }
  const radii: number[] = [];
  for (let j = jCenter; j < n2; j++) radii.push(coord(1, j));
  const times = snaps.map((s) => s.time);

  const svg = new Svg(W, H);
  const x = linearScale(radii[0], radii[radii.length - 1], BOX.x0, BOX.x1);
  const y = linearScale(times[0], times[times.length - 1], BOX.y1, BOX.y0);
  // cells first, axes on top
  for (let k = 0; k < snaps.length; k++) {
    const vals = snaps[k].values;
    const y0 = y(times[Math.min(k + 1, snaps.length - 1)]);
    const y1 = y(times[Math.max(k - 0, 0)]);
    const h = Math.abs(y1 - y0) || (BOX.y1 - BOX.y0) / snaps.length;
    for (let j = jCenter; j < n2; j++) {
      const v = vals[iCenter * n2 + j][2];
      const x0 = x(radii[j - jCenter]);
      const x1b = j - jCenter + 1 < radii.length ? x(radii[j - jCenter + 1]) : BOX.x1;
      svg.rect(x0, Math.min(y0, y1), Math.max(0.5, x1b - x0), h, divergingColor(v));
    }
  }
  drawAxes(svg, {
    x, y,
    xTicks: ticks(radii[0], radii[radii.length - 1], 5),
    yTicks: ticks(times[0], times[times.length - 1], 6),
    box: BOX,
    xLabel: "radius",
    yLabel: "time",
    title: title ?? `${meta.experiment}: center-line z over (radius, time)`,
  });

  const blowup = (meta.analysis as Record<string, unknown>)["t_energy_max"];
  let tRule: number | null = typeof blowup === "number" ? blowup : null;
  if (tRule === null) {
    const table = readDiagnostics(bundleDir);
    const t = column(table, "time", bundleDir);
    const e = column(table, "energy", bundleDir);
    let k = 0;
    e.forEach((v, i) => {
      if (v > e[k]) k = i;
    });
    tRule = t[k];
  }
  if (tRule >= times[0] && tRule <= times[times.length - 1]) {
    svg.line(BOX.x0, y(tRule), BOX.x1, y(tRule), "#d62728", 1.6);
    svg.text(BOX.x1 - 6, y(tRule) - 5, `blow-up t = ${tRule.toPrecision(3)}`, 11, "end", "#d62728");
  }
  return svg.render();
}

export function renderAmplitudeTrace(bundleDir: string, title?: string): string {
  const meta = readMetadata(bundleDir);
  const paths = snapshotPaths(bundleDir, meta);
  const t: number[] = [];
  const amp: number[] = [];
  for (const p of paths) {
    const snap = readSnapshot(p);
    requireComponents(snap, 3, p);
    t.push(snap.time);
    amp.push(Math.max(...snap.values.map((v) => Math.abs(v[2]))));
  }
  const svg = new Svg(W, H);
  const x = linearScale(t[0], t[t.length - 1], BOX.x0, BOX.x1);
  const y = linearScale(0, 1.05, BOX.y1, BOX.y0);
  drawAxes(svg, {
    x, y,
    xTicks: ticks(t[0], t[t.length - 1]),
    yTicks: ticks(0, 1.05, 6),
    box: BOX,
    xLabel: "time",
    yLabel: "max amplitude in z",
    title: title ?? `${meta.experiment}: z-amplitude trace`,
  });
  svg.line(BOX.x0, y(1), BOX.x1, y(1), "#aaa", 1, "4 3");
  svg.polyline(t.map((tt, i) => [x(tt), y(amp[i])] as [number, number]), "#d62728", 1.4);
  return svg.render();
}

export function render(job: FigureJob): string {
  const panels = job.options.panels ?? 8;
  const input = job.inputs[0];
  switch (job.kind) {
    case "loglog-error":
      return renderLoglogError(input, job.options.title);
    case "energy-trace":
      return renderEnergyTrace(input, job.options.title);
    case "sphere-snapshots":
      return renderSphereSnapshots(input, panels, job.options.title);
    case "disk-snapshots":
      return renderDiskSnapshots(input, panels, job.options.title);
    case "radius-time-heatmap":
      return renderRadiusTimeHeatmap(input, job.options.title);
    case "amplitude-trace":
      return renderAmplitudeTrace(input, job.options.title);
  }
}
