import { execFileSync } from "child_process";
import { existsSync, mkdirSync, readFileSync, writeFileSync } from "fs";
import { dirname, join } from "path";
import { fileURLToPath } from "url";
import { beforeAll, describe, expect, it } from "vitest";

import { main } from "../src/cli.js";
import {
  render,
  renderAmplitudeTrace,
  renderDiskSnapshots,
  renderEnergyTrace,
  renderLoglogError,
  renderRadiusTimeHeatmap,
  renderSphereSnapshots,
  jobSchema,
} from "../src/figures.js";
import { BundleError, readMetadata, readSnapshot } from "../src/schema.js";

const HERE = dirname(fileURLToPath(import.meta.url));
const FIXTURES = join(HERE, "fixtures");
const OUT = join(FIXTURES, "out");

const bundle = (name: string) => join(FIXTURES, name);

beforeAll(() => {
  mkdirSync(OUT, { recursive: true });
});

function expectSvg(svg: string): void {
  expect(svg.startsWith("<svg")).toBe(true);
  expect(svg.trimEnd().endsWith("</svg>")).toBe(true);
}

describe("figure kinds render from their bundles", () => {
  it("loglog-error", () => {
    const svg = renderLoglogError(bundle("convergence"));
    expectSvg(svg);
    expect(svg).toContain("fitted slope");
  });

  it("energy-trace", () => {
    const svg = renderEnergyTrace(bundle("energy"));
    expectSvg(svg);
    expect(svg).toContain("(E - E0) / E0");
  });

  it("sphere-snapshots", () => {
    const svg = renderSphereSnapshots(bundle("breather"), 8);
    expectSvg(svg);
    expect((svg.match(/<circle/g) ?? []).length).toBeGreaterThan(100);
  });

  it("disk-snapshots", () => {
    const svg = renderDiskSnapshots(bundle("hyperbolic"), 8);
    expectSvg(svg);
  });

  it("radius-time-heatmap", () => {
    const svg = renderRadiusTimeHeatmap(bundle("blowup"));
    expectSvg(svg);
    expect(svg).toContain("blow-up t =");
  });

  it("amplitude-trace", () => {
    const svg = renderAmplitudeTrace(bundle("breather"));
    expectSvg(svg);
  });
});

describe("acceptance", () => {
  it("every figure kind renders without error from its bundle", () => {
    const pairs: Array<[string, string]> = [
      ["loglog-error", "convergence"],
      ["energy-trace", "energy"],
      ["sphere-snapshots", "breather"],
      ["disk-snapshots", "hyperbolic"],
      ["radius-time-heatmap", "blowup"],
      ["amplitude-trace", "breather"],
    ];
    for (const [kind, dir] of pairs) {
      const outPath = join(OUT, `${kind}.svg`);
      const jobPath = join(OUT, `${kind}.job.json`);
      writeFileSync(
        jobPath,
        JSON.stringify({ kind, inputs: [bundle(dir)], output: outPath }),
      );
      expect(main(["render", "--job", jobPath]), `${kind} failed`).toBe(0);
      expectSvg(readFileSync(outPath, "utf-8"));
    }
  });

  it("loglog slope annotation matches the study slope to 2 decimals", () => {
    const meta = readMetadata(bundle("convergence"));
    const slope = (meta.analysis as Record<string, unknown>)["slope"];
    expect(typeof slope).toBe("number");
    const svg = renderLoglogError(bundle("convergence"));
    const match = svg.match(/fitted slope ≈ ([-0-9.]+)</);
    expect(match).not.toBeNull();
    expect(match![1]).toBe((slope as number).toFixed(2));
    // and the study's slope satisfies the primary convergence criterion
    expect(slope as number).toBeGreaterThanOrEqual(1.8);
    expect(slope as number).toBeLessThanOrEqual(2.4);
  });
});

describe("breather amplitude behaviour", () => {
  it("z amplitude rises toward 1 within the run", () => {
    const meta = readMetadata(bundle("breather"));
    const names = (meta.files as { snapshots: string[] }).snapshots;
    const amps = names.map((n) => {
      const snap = readSnapshot(join(bundle("breather"), n));
      return Math.max(...snap.values.map((v) => Math.abs(v[2])));
    });
    expect(amps[0]).toBeLessThan(0.05);
    expect(Math.max(...amps)).toBeGreaterThan(0.9);
  });
});

describe("cli", () => {
  it("renders a job file end to end", () => {
    const jobPath = join(OUT, "job.json");
    const outPath = join(OUT, "cli-energy.svg");
    writeFileSync(
      jobPath,
      JSON.stringify({ kind: "energy-trace", inputs: [bundle("energy")], output: outPath }),
    );
    expect(main(["render", "--job", jobPath])).toBe(0);
    expect(existsSync(outPath)).toBe(true);
    expectSvg(readFileSync(outPath, "utf-8"));
  });

  it("compiled binary renders a job", () => {
    const jobPath = join(OUT, "job-bin.json");
    const outPath = join(OUT, "cli-bin.svg");
    writeFileSync(
      jobPath,
      JSON.stringify({ kind: "amplitude-trace", inputs: [bundle("breather")], output: outPath }),
    );
    execFileSync("node", [join(HERE, "..", "dist", "cli.js"), "render", "--job", jobPath]);
    expect(existsSync(outPath)).toBe(true);
  });

  it("rejects a bad subcommand", () => {
    expect(main(["paint"])).toBe(1);
  });

  it("rejects an invalid job", () => {
    const jobPath = join(OUT, "bad-job.json");
    writeFileSync(jobPath, JSON.stringify({ kind: "pie-chart", inputs: [], output: "x.svg" }));
    expect(main(["render", "--job", jobPath])).toBe(1);
  });

  it("fails cleanly on an empty diagnostics file", () => {
    const dir = join(OUT, "empty-bundle");
    mkdirSync(dir, { recursive: true });
    const meta = readFileSync(join(bundle("energy"), "metadata.json"), "utf-8");
    writeFileSync(join(dir, "metadata.json"), meta);
    writeFileSync(join(dir, "diagnostics.csv"), "step,time,energy,momentum,constraint_residual\n");
    const jobPath = join(OUT, "empty-job.json");
    writeFileSync(
      jobPath,
      JSON.stringify({ kind: "energy-trace", inputs: [dir], output: join(OUT, "never.svg") }),
    );
    expect(main(["render", "--job", jobPath])).toBe(1);
  });
});

describe("schema validation", () => {
  it("missing columns are reported", () => {
    const dir = join(OUT, "no-energy");
    mkdirSync(dir, { recursive: true });
    writeFileSync(
      join(dir, "metadata.json"),
      readFileSync(join(bundle("energy"), "metadata.json"), "utf-8"),
    );
    writeFileSync(join(dir, "diagnostics.csv"), "step,time\n0,0.0\n1,0.1\n");
    expect(() => renderEnergyTrace(dir)).toThrow(BundleError);
    expect(() => renderEnergyTrace(dir)).toThrow(/missing column 'energy'/);
  });

  it("wrong component count is reported", () => {
    // torus snapshots are 2-component: not sphere-valued
    expect(() => renderSphereSnapshots(bundle("energy"), 4)).toThrow(/3-component/);
  });

  it("rendering is deterministic", () => {
    const a = renderRadiusTimeHeatmap(bundle("blowup"));
    const b = renderRadiusTimeHeatmap(bundle("blowup"));
    expect(a).toBe(b);
  });
});
