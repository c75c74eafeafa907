/**
 * Stub scorers for eval items.
 *
 * `frequency` is an honest unigram baseline: it counts token frequencies over
 * the eval file itself (excluding each item's target position, which holds
 * the answer), predicts the most frequent counted token for masked items, and
 * scores minimal pairs by add-one-smoothed unigram log-probability.  Ties in
 * the masked prediction are broken by a seeded deterministic shuffle so the
 * same seed always yields the same bytes.
 *
 * `uniform` assigns every sequence the same log-probability, so every minimal
 * pair is a tie; it exists to exercise the tie path of the scorer.
 */

import { EvalItem, MaskedItem, MinimalPairItem } from "./records";

export interface Model {
  readonly name: string;
  predictMasked(item: MaskedItem): string;
  scoreSequence(item: MinimalPairItem, tokens: string[]): number;
}

/** mulberry32: small deterministic PRNG, plenty for tie-breaking. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export class FrequencyModel implements Model {
  readonly name = "frequency";
  private readonly counts = new Map<string, number>();
  private total = 0;
  private readonly argmax: string;

  constructor(items: EvalItem[], seed: number) {
    for (const item of items) {
      const skip = item.task === "masked" ? item.mask_index : item.target_index;
      item.tokens.forEach((tok, i) => {
        if (i === skip) return;
        this.counts.set(tok, (this.counts.get(tok) ?? 0) + 1);
        this.total += 1;
      });
    }
    this.argmax = this.pickArgmax(seed);
  }

  private pickArgmax(seed: number): string {
    if (this.counts.size === 0) return "";
    const best = Math.max(...this.counts.values());
    const tied = [...this.counts.keys()]
      .filter((t) => this.counts.get(t) === best)
      .sort();
    const rng = mulberry32(seed);
    return tied[Math.floor(rng() * tied.length)] ?? tied[0]!;
  }

  predictMasked(_item: MaskedItem): string {
    return this.argmax;
  }

  scoreSequence(_item: MinimalPairItem, tokens: string[]): number {
    const vocab = this.counts.size + 1;
    let lp = 0;
    for (const tok of tokens) {
      lp += Math.log(((this.counts.get(tok) ?? 0) + 1) / (this.total + vocab));
    }
    return lp;
  }
}

export class UniformModel implements Model {
  readonly name = "uniform";

  predictMasked(item: MaskedItem): string {
    // lowest sorted token in the sentence: arbitrary but deterministic
    return [...item.tokens].sort()[0] ?? "";
  }

  scoreSequence(_item: MinimalPairItem, _tokens: string[]): number {
    return 0;
  }
}

export function buildModel(name: string, items: EvalItem[], seed: number): Model {
  switch (name) {
    case "frequency":
      return new FrequencyModel(items, seed);
    case "uniform":
      return new UniformModel();
    default:
      throw new Error(`unknown model ${JSON.stringify(name)}; ` +
                      `expected "frequency" or "uniform"`);
  }
}
