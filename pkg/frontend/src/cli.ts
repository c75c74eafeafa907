#!/usr/bin/env node
/**
 * perturbkit-adapter respond --eval <file> --model frequency|uniform
 *                            [--seed N] --out <file>
 *
 * Reads a perturbkit eval JSONL file, answers every item with a stub model,
 * and writes a perturbkit response JSONL file the primary scorer accepts.
 * Exit codes: 0 ok, 2 usage error, 3 data error.
 */

import { parseArgs } from "util";

import { respond } from "./adapter";
import { buildModel } from "./models";
import { readEvalFile, RecordError, writeResponseFile } from "./records";

export const EXIT_OK = 0;
export const EXIT_USAGE = 2;
export const EXIT_DATA = 3;

const USAGE =
  "usage: perturbkit-adapter respond --eval <file> " +
  "--model frequency|uniform [--seed N] --out <file>";

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  if (command !== "respond") {
    process.stderr.write(`${USAGE}\n`);
    return EXIT_USAGE;
  }
  let values: { eval?: string; model?: string; seed?: string; out?: string };
  try {
    ({ values } = parseArgs({
      args: rest,
      options: {
        eval: { type: "string" },
        model: { type: "string" },
        seed: { type: "string", default: "0" },
        out: { type: "string" },
      },
    }));
  } catch (exc) {
    process.stderr.write(`${exc}\n${USAGE}\n`);
    return EXIT_USAGE;
  }
  if (!values.eval || !values.model || !values.out) {
    process.stderr.write(`${USAGE}\n`);
    return EXIT_USAGE;
  }
  const seed = Number(values.seed);
  if (!Number.isInteger(seed) || seed < 0) {
    process.stderr.write(`--seed must be a non-negative integer\n`);
    return EXIT_USAGE;
  }
  try {
    const items = readEvalFile(values.eval);
    const model = buildModel(values.model, items, seed);
    writeResponseFile(values.out, respond(items, model));
  } catch (exc) {
    if (exc instanceof RecordError) {
      process.stderr.write(`data error: ${exc.message}\n`);
      return EXIT_DATA;
    }
    if (exc instanceof Error && "code" in exc &&
        (exc as NodeJS.ErrnoException).code === "ENOENT") {
      process.stderr.write(`data error: ${exc.message}\n`);
      return EXIT_DATA;
    }
    if (exc instanceof Error && exc.message.startsWith("unknown model")) {
      process.stderr.write(`${exc.message}\n`);
      return EXIT_USAGE;
    }
    throw exc;
  }
  return EXIT_OK;
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
