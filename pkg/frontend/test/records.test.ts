import { describe, expect, test } from "vitest";
import * as path from "path";

import {
  EVAL_HEADER,
  RESPONSE_HEADER,
  formatResponses,
  parseEvalText,
  readEvalFile,
  RecordError,
} from "../src/records";

const FIXTURES = path.join(__dirname, "fixtures");

describe("eval file parsing", () => {
  test("reads masked fixture with every field populated", () => {
    const items = readEvalFile(path.join(FIXTURES, "masked.jsonl"));
    expect(items).toHaveLength(12);
    for (const item of items) {
      expect(item.task).toBe("masked");
      if (item.task !== "masked") continue;
      expect(item.tokens.length).toBeGreaterThan(0);
      expect(item.mask_index).toBeGreaterThanOrEqual(0);
      expect(item.mask_index).toBeLessThan(item.tokens.length);
      // protocol invariant: the answer sits at the masked position
      expect(item.tokens[item.mask_index]).toBe(item.answer);
      expect(item.target_pos).toBe("VERB");
    }
  });

  test("reads minimal-pair fixture with alternatives excluding the answer", () => {
    const items = readEvalFile(path.join(FIXTURES, "pairs.jsonl"));
    expect(items).toHaveLength(12);
    for (const item of items) {
      expect(item.task).toBe("minimal_pair");
      if (item.task !== "minimal_pair") continue;
      expect(item.alternatives).toHaveLength(3);
      expect(item.alternatives).not.toContain(item.answer);
      expect(item.tokens[item.target_index]).toBe(item.answer);
    }
  });

  test("rejects a file without the protocol header", () => {
    expect(() => parseEvalText('{"task":"masked"}\n'))
      .toThrow(RecordError);
  });

  test("rejects invalid JSON with the record number", () => {
    expect(() => parseEvalText(`${EVAL_HEADER}\n{nope\n`))
      .toThrow(/record 2/);
  });

  test("rejects unknown task values", () => {
    expect(() => parseEvalText(`${EVAL_HEADER}\n{"task":"cloze","id":"x"}\n`))
      .toThrow(/unknown task/);
  });

  test("rejects records with missing fields", () => {
    expect(() => parseEvalText(
      `${EVAL_HEADER}\n{"task":"masked","id":"x"}\n`))
      .toThrow(/missing fields/);
  });

  test("rejects out-of-range mask_index", () => {
    const rec = {
      id: "m", task: "masked", source_sentence_id: "s",
      tokens: ["a", "b"], mask_index: 5, answer: "a",
      target_pos: "VERB", word_class: "other",
    };
    expect(() => parseEvalText(`${EVAL_HEADER}\n${JSON.stringify(rec)}\n`))
      .toThrow(/out of range/);
  });
});

describe("response serialization", () => {
  test("starts with the response header and ends with a newline", () => {
    const text = formatResponses([{ id: "a", prediction: "go" }]);
    expect(text.startsWith(`${RESPONSE_HEADER}\n`)).toBe(true);
    expect(text.endsWith("\n")).toBe(true);
  });

  test("prediction and pair records carry exactly the protocol keys", () => {
    const text = formatResponses([
      { id: "a", prediction: "go" },
      { id: "b", logprob_original: -1.5, logprob_alternatives: [-2, -3] },
    ]);
    const [, line1, line2] = text.split("\n");
    expect(Object.keys(JSON.parse(line1!))).toEqual(["id", "prediction"]);
    expect(Object.keys(JSON.parse(line2!))).toEqual(
      ["id", "logprob_original", "logprob_alternatives"]);
  });
});
