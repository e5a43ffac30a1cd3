/**
 * Generates primary-component bundles the figure tests consume, by driving
 * the msconstrain CLI. Bundles are cached under test/fixtures.
 */

import { execFileSync } from "child_process";
import { existsSync, mkdirSync, writeFileSync } from "fs";
import { dirname, join } from "path";
import { fileURLToPath } from "url";

export const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "fixtures");

interface RunSpec {
  name: string;
  config: Record<string, unknown>;
}

const RUNS: RunSpec[] = [
  {
    name: "energy",
    config: { experiment: "torus-energy", points: 64, final_time: 1.5 },
  },
  {
    name: "breather",
    config: {
      experiment: "breather",
      points: 256,
      final_time: 1.2,
      snapshot_every: 8,
      diagnostics_every: 4,
    },
  },
  {
    name: "blowup",
    config: {
      experiment: "blowup",
      points: 48,
      final_time: 0.45,
      snapshot_every: 8,
      diagnostics_every: 2,
    },
  },
  {
    name: "hyperbolic",
    config: {
      experiment: "hyperbolic",
      points: 128,
      final_time: 0.8,
      snapshot_every: 16,
      diagnostics_every: 4,
    },
  },
];

function cli(args: string[]): void {
  execFileSync("python3", ["-m", "msconstrain", ...args], {
    stdio: ["ignore", "pipe", "inherit"],
  });
}

export default function setup(): void {
  mkdirSync(FIXTURES, { recursive: true });
  for (const spec of RUNS) {
    const out = join(FIXTURES, spec.name);
    if (existsSync(join(out, "metadata.json"))) continue;
    const cfg = join(FIXTURES, `${spec.name}.json`);
    writeFileSync(cfg, JSON.stringify(spec.config));
    cli(["run", "--config", cfg, "--out", out]);
  }
  const convOut = join(FIXTURES, "convergence");
  if (!existsSync(join(convOut, "metadata.json"))) {
    const cfg = join(FIXTURES, "convergence.json");
    // the acceptance-criterion study: Table-1 modes, courant 1/2, T = 1
    writeFileSync(
      cfg,
      JSON.stringify({
        experiment: "convergence2d",
        final_time: 1.0,
        courant: 0.5,
        params: { n_values: [16, 32, 64, 128] },
      }),
    );
    cli(["convergence", "--config", cfg, "--out", convOut]);
  }
}
