/**
 * Parsing and serialization for the perturbkit JSONL file protocol.
 *
 * Eval files start with the line `# perturbkit eval records v1` and hold one
 * JSON object per line, either a masked-prediction item or a minimal-pair
 * item.  Response files start with `# perturbkit response records v1` and
 * hold one JSON object per eval item.
 */

import * as fs from "fs";

export const EVAL_HEADER = "# perturbkit eval records v1";
export const RESPONSE_HEADER = "# perturbkit response records v1";

export interface MaskedItem {
  task: "masked";
  id: string;
  source_sentence_id: string;
  tokens: string[];
  mask_index: number;
  answer: string;
  target_pos: string;
  word_class: string;
}

export interface MinimalPairItem {
  task: "minimal_pair";
  id: string;
  source_sentence_id: string;
  tokens: string[];
  target_index: number;
  answer: string;
  alternatives: string[];
  target_pos: string;
  word_class: string;
  bin: number;
}

export type EvalItem = MaskedItem | MinimalPairItem;

export interface PredictionResponse {
  id: string;
  prediction: string;
  topk?: string[];
}

export interface PairResponse {
  id: string;
  logprob_original: number;
  logprob_alternatives: number[];
}

export type ResponseRecord = PredictionResponse | PairResponse;

export class RecordError extends Error {}

const MASKED_FIELDS = [
  "id", "task", "source_sentence_id", "tokens", "mask_index",
  "answer", "target_pos", "word_class",
];
const PAIR_FIELDS = [
  "id", "task", "source_sentence_id", "tokens", "target_index",
  "answer", "alternatives", "target_pos", "word_class", "bin",
];

function requireFields(rec: Record<string, unknown>, fields: string[],
                       lineno: number): void {
  const missing = fields.filter((f) => !(f in rec));
  if (missing.length > 0) {
    throw new RecordError(
      `record ${lineno}: missing fields [${missing.join(", ")}]`);
  }
}

function parseItem(rec: Record<string, unknown>, lineno: number): EvalItem {
  const task = rec["task"];
  if (task === "masked") {
    requireFields(rec, MASKED_FIELDS, lineno);
    const item = rec as unknown as MaskedItem;
    if (item.mask_index < 0 || item.mask_index >= item.tokens.length) {
      throw new RecordError(`record ${lineno}: mask_index out of range`);
    }
    return item;
  }
  if (task === "minimal_pair") {
    requireFields(rec, PAIR_FIELDS, lineno);
    const item = rec as unknown as MinimalPairItem;
    if (item.target_index < 0 || item.target_index >= item.tokens.length) {
      throw new RecordError(`record ${lineno}: target_index out of range`);
    }
    if (item.alternatives.length === 0) {
      throw new RecordError(`record ${lineno}: empty alternatives`);
    }
    return item;
  }
  throw new RecordError(`record ${lineno}: unknown task ${JSON.stringify(task)}`);
}

export function parseEvalText(text: string): EvalItem[] {
  const lines = text.split("\n");
  if (lines.length === 0 || lines[0] !== EVAL_HEADER) {
    throw new RecordError(
      `not a perturbkit eval file (expected header ${JSON.stringify(EVAL_HEADER)})`);
  }
  const items: EvalItem[] = [];
  for (let i = 1; i < lines.length; i++) {
    const line = lines[i] ?? "";
    if (line === "" || line.startsWith("#")) continue;
    let rec: Record<string, unknown>;
    try {
      rec = JSON.parse(line);
    } catch (exc) {
      throw new RecordError(`record ${i + 1}: invalid JSON (${exc})`);
    }
    items.push(parseItem(rec, i + 1));
  }
  return items;
}

export function readEvalFile(path: string): EvalItem[] {
  return parseEvalText(fs.readFileSync(path, "utf-8"));
}

/** Serialize responses with the same key order the Python writer uses. */
export function formatResponses(records: ResponseRecord[]): string {
  const lines = [RESPONSE_HEADER];
  for (const r of records) {
    if ("prediction" in r) {
      const out: Record<string, unknown> = { id: r.id, prediction: r.prediction };
      if (r.topk !== undefined) out["topk"] = r.topk;
      lines.push(JSON.stringify(out));
    } else {
      lines.push(JSON.stringify({
        id: r.id,
        logprob_original: r.logprob_original,
        logprob_alternatives: r.logprob_alternatives,
      }));
    }
  }
  return lines.join("\n") + "\n";
}

export function writeResponseFile(path: string, records: ResponseRecord[]): void {
  fs.writeFileSync(path, formatResponses(records), "utf-8");
}
