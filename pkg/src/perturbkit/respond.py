"""Answer eval files with the embedded n-gram model, producing response
records the score module accepts."""

from __future__ import annotations

from typing import Iterable, Optional, Sequence

from .evalgen import MaskedItem, MinimalPairItem
from .ngram import NGramModel
from .score import ResponseRecord


def respond_masked(model: NGramModel, items: Sequence[MaskedItem],
                   candidates: Sequence[str]) -> list[ResponseRecord]:
    """Top-1 masked prediction over a fixed candidate set."""
    cands = sorted(set(candidates))
    out = []
    for item in items:
        pred = model.masked_argmax(item.tokens, item.mask_index, cands)
        out.append(ResponseRecord(id=item.id, prediction=pred))
    return out


def respond_pairs(model: NGramModel,
                  items: Sequence[MinimalPairItem]) -> list[ResponseRecord]:
    """Full-sentence log-probabilities for the original and each alternative."""
    out = []
    for item in items:
        lp_orig = model.sentence_logprob(item.tokens)
        lps = []
        for alt in item.alternatives:
            tokens = list(item.tokens)
            tokens[item.target_index] = alt
            lps.append(model.sentence_logprob(tokens))
        out.append(ResponseRecord(id=item.id, logprob_original=lp_orig,
                                  logprob_alternatives=lps))
    return out
