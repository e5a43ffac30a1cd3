/**
 * Minimal deterministic SVG builder: fixed-precision coordinates, no
 * randomness, no timestamps, so rerendering a bundle reproduces the file.
 */

export interface Margins {
  top: number;
  right: number;
  bottom: number;
  left: number;
}

const FONT = "font-family=\"Helvetica, Arial, sans-serif\"";

export function fmt(x: number): string {
  if (!Number.isFinite(x)) throw new Error(`non-finite coordinate ${x}`);
  return x.toFixed(2).replace(/\.00$/, "");
}

export type Scale = (v: number) => number;

export function linearScale(d0: number, d1: number, r0: number, r1: number): Scale {
  const span = d1 - d0 || 1;
  return (v) => r0 + ((v - d0) / span) * (r1 - r0);
}

export function logScale(d0: number, d1: number, r0: number, r1: number): Scale {
  if (d0 <= 0 || d1 <= 0) throw new Error("log scale needs positive bounds");
  const l0 = Math.log10(d0);
  const span = Math.log10(d1) - l0 || 1;
  return (v) => r0 + ((Math.log10(v) - l0) / span) * (r1 - r0);
}

export function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (!Number.isFinite(lo)) throw new Error("empty extent");
  if (lo === hi) {
    const pad = Math.abs(lo) > 0 ? Math.abs(lo) * 0.1 : 1;
    return [lo - pad, hi + pad];
  }
  return [lo, hi];
}

/** 1-2-5 tick positions inside [lo, hi]. */
export function ticks(lo: number, hi: number, count = 6): number[] {
  const span = hi - lo;
  if (span <= 0) return [lo];
  const step0 = span / Math.max(1, count);
  const mag = Math.pow(10, Math.floor(Math.log10(step0)));
  let step = mag;
  for (const m of [1, 2, 5, 10]) {
    if (step0 <= m * mag) {
      step = m * mag;
      break;
    }
  }
  const out: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + 1e-12 * span; v += step) {
    out.push(Math.abs(v) < 1e-12 * span ? 0 : v);
  }
  return out;
}

export function decadeTicks(lo: number, hi: number): number[] {
  const out: number[] = [];
  for (let e = Math.ceil(Math.log10(lo) - 1e-9); e <= Math.floor(Math.log10(hi) + 1e-9); e++) {
    out.push(Math.pow(10, e));
  }
  return out.length > 0 ? out : [lo, hi];
}

function tickLabel(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 0.01 && a < 10000) {
    return String(Number(v.toPrecision(6)));
  }
  return v.toExponential(0).replace("+", "");
}

export class Svg {
  private parts: string[] = [];

  constructor(readonly width: number, readonly height: number) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
        `viewBox="0 0 ${width} ${height}">`,
      `<rect width="${width}" height="${height}" fill="white"/>`,
    );
  }

  raw(s: string): void {
    this.parts.push(s);
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke = "#444", width = 1, dash = ""): void {
    const d = dash ? ` stroke-dasharray="${dash}"` : "";
    this.parts.push(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" ` +
        `stroke="${stroke}" stroke-width="${width}"${d}/>`,
    );
  }

  polyline(pts: Array<[number, number]>, stroke = "#1f77b4", width = 1.2): void {
    const coords = pts.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    this.parts.push(
      `<polyline points="${coords}" fill="none" stroke="${stroke}" stroke-width="${width}"/>`,
    );
  }

  circle(cx: number, cy: number, r: number, fill = "#1f77b4", stroke = "none"): void {
    this.parts.push(
      `<circle cx="${fmt(cx)}" cy="${fmt(cy)}" r="${fmt(r)}" fill="${fill}" stroke="${stroke}"/>`,
    );
  }

  rect(x: number, y: number, w: number, h: number, fill: string): void {
    this.parts.push(
      `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}" fill="${fill}"/>`,
    );
  }

  text(x: number, y: number, s: string, size = 11, anchor = "start", fill = "#222"): void {
    const esc = s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
    this.parts.push(
      `<text x="${fmt(x)}" y="${fmt(y)}" font-size="${size}" text-anchor="${anchor}" ` +
        `fill="${fill}" ${FONT}>${esc}</text>`,
    );
  }

  render(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}

export interface AxesSpec {
  x: Scale;
  y: Scale;
  xTicks: number[];
  yTicks: number[];
  box: { x0: number; y0: number; x1: number; y1: number };
  xLabel: string;
  yLabel: string;
  title?: string;
}

export function drawAxes(svg: Svg, spec: AxesSpec): void {
  const { box } = spec;
  for (const t of spec.xTicks) {
    const px = spec.x(t);
    svg.line(px, box.y0, px, box.y1, "#ddd", 0.8);
    svg.line(px, box.y1, px, box.y1 + 4, "#444", 1);
    svg.text(px, box.y1 + 16, tickLabel(t), 10, "middle");
  }
  for (const t of spec.yTicks) {
    const py = spec.y(t);
    svg.line(box.x0, py, box.x1, py, "#ddd", 0.8);
    svg.line(box.x0 - 4, py, box.x0, py, "#444", 1);
    svg.text(box.x0 - 7, py + 3.5, tickLabel(t), 10, "end");
  }
  svg.line(box.x0, box.y0, box.x0, box.y1);
  svg.line(box.x0, box.y1, box.x1, box.y1);
  svg.text((box.x0 + box.x1) / 2, box.y1 + 32, spec.xLabel, 12, "middle");
  svg.raw(
    `<text x="${fmt(box.x0 - 40)}" y="${fmt((box.y0 + box.y1) / 2)}" font-size="12" ` +
      `text-anchor="middle" fill="#222" ${FONT} ` +
      `transform="rotate(-90 ${fmt(box.x0 - 40)} ${fmt((box.y0 + box.y1) / 2)})">` +
      `${spec.yLabel}</text>`,
  );
  if (spec.title) {
    svg.text((box.x0 + box.x1) / 2, box.y0 - 8, spec.title, 13, "middle");
  }
}

/** Diverging blue-white-red map for values in [-1, 1]. */
export function divergingColor(v: number): string {
  const t = Math.max(-1, Math.min(1, v));
  const lerp = (a: number, b: number, s: number) => Math.round(a + (b - a) * s);
  let r: number, g: number, b: number;
  if (t < 0) {
    const s = t + 1; // [-1,0] -> [0,1]
    r = lerp(59, 247, s);
    g = lerp(76, 247, s);
    b = lerp(192, 247, s);
  } else {
    r = lerp(247, 180, t);
    g = lerp(247, 4, t);
    b = lerp(247, 38, t);
  }
  return `rgb(${r},${g},${b})`;
}
