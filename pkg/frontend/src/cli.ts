#!/usr/bin/env node
/**
 * plots render --job <job.json>
 *
 * The job names a figure kind, the input bundle directory and the output
 * image path; see figures.ts for the kinds.
 */

import { readFileSync, writeFileSync, mkdirSync } from "fs";
import { dirname } from "path";
import { FigureJob, jobSchema, render } from "./figures.js";
import { BundleError } from "./schema.js";

export function loadJob(path: string): FigureJob {
  let raw: string;
  try {
    raw = readFileSync(path, "utf-8");
  } catch (err) {
    throw new BundleError(`cannot read job file ${path}: ${err}`);
  }
  let parsedJson: unknown;
  try {
    parsedJson = JSON.parse(raw);
  } catch (err) {
    throw new BundleError(`${path}: not valid JSON: ${err}`);
  }
  const parsed = jobSchema.safeParse(parsedJson);
  if (!parsed.success) {
    throw new BundleError(`${path}: invalid figure job: ${parsed.error.message}`);
  }
  return parsed.data;
}

export function main(argv: string[]): number {
  if (argv[0] !== "render") {
    console.error("usage: plots render --job <job.json>");
    return 1;
  }
  const jobIdx = argv.indexOf("--job");
  if (jobIdx < 0 || jobIdx + 1 >= argv.length) {
    console.error("error: missing --job <job.json>");
    return 1;
  }
  try {
    const job = loadJob(argv[jobIdx + 1]);
    const svg = render(job);
    mkdirSync(dirname(job.output), { recursive: true });
    writeFileSync(job.output, svg);
    console.log(`wrote ${job.output}`);
    return 0;
  } catch (err) {
    if (err instanceof BundleError) {
      console.error(`error: ${err.message}`);
      return 1;
    }
    throw err;
  }
}

const entry = process.argv[1] ?? "";
if (entry.endsWith("cli.js") || entry.endsWith("plots")) {
  process.exit(main(process.argv.slice(2)));
}
