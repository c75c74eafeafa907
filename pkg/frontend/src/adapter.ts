/**
 * Turn eval items into response records with a given model.  Output order
 * follows eval-file order, so output bytes are a pure function of
 * (eval file, model name, seed).
 */

import { EvalItem, ResponseRecord } from "./records";
import { Model } from "./models";

export function respond(items: EvalItem[], model: Model): ResponseRecord[] {
  return items.map((item): ResponseRecord => {
    if (item.task === "masked") {
      return { id: item.id, prediction: model.predictMasked(item) };
    }
    const original = model.scoreSequence(item, item.tokens);
    const alternatives = item.alternatives.map((alt) => {
      const tokens = [...item.tokens];
      tokens[item.target_index] = alt;
      return model.scoreSequence(item, tokens);
    });
    return {
      id: item.id,
      logprob_original: original,
      logprob_alternatives: alternatives,
    };
  });
}
