"""The four training-data ablations: same-PoS word replacement keyed to
verbs or nouns, and within-sentence shuffling at unigram or base-NP scale.

Every sentence gets its own RNG stream derived from (seed, split name,
ordinal), so corpus-level output is identical no matter how the work is
chunked or parallelized.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .corpus import AnnotatedSentence, CorpusSplit, Token
from .lexicon import COARSE, FINE, FrequencyTable, pos_key_of, sample_same_pos

KINDS = ("original", "replace_word_verb", "replace_word_noun",
         "shuffle_1gram", "shuffle_np")

REPLACEABLE_UPOS = {"NOUN", "ADJ", "ADV"}


class PerturbError(ValueError):
    pass


@dataclass(frozen=True)
class PerturbationSpec:
    kind: str
    seed: int = 0
    granularity: str = COARSE

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise PerturbError(f"unknown perturbation kind {self.kind!r}")
        if self.granularity not in (COARSE, FINE):
            raise PerturbError(f"unknown granularity {self.granularity!r}")


@dataclass
class PerturbStats:
    sentences: int = 0
    replaced_tokens: int = 0
    noop_replacements: int = 0
    unknown_pos_tokens: int = 0


def sentence_rng(seed: int, split_name: str, ordinal: int) -> np.random.Generator:
    """Independent per-sentence stream; stable across platforms and workers."""
    return np.random.default_rng(
        np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF,
                                zlib.crc32(split_name.encode("utf-8")),
                                ordinal]))


def _replaced_token(tok: Token, new_form: str, keep_fine: bool) -> Token:
    # replacement shares the PoS key; head/deprel no longer hold
    return Token(form=new_form, upos=tok.upos,
                 xpos=tok.xpos if keep_fine else None)


def _replace(sent: AnnotatedSentence, table: FrequencyTable,
             rng: np.random.Generator, keep_indices: set[int],
             target_upos: set[str], granularity: str,
             stats: Optional[PerturbStats]) -> AnnotatedSentence:
    tokens: list[Token] = []
    for i, tok in enumerate(sent.tokens):
        upos = tok.upos
        replace_it = (upos in target_upos or upos == "VERB") and i not in keep_indices
        if not replace_it:
            tokens.append(tok)
            continue
        key = pos_key_of(tok, granularity)
        if key is None or key not in table.counts:
            if stats:
                stats.unknown_pos_tokens += 1
            tokens.append(tok)
            continue
        form, changed = sample_same_pos(table, key, tok.form, rng)
        if not changed:
            if stats:
                stats.noop_replacements += 1
            tokens.append(tok)
        else:
            if stats:
                stats.replaced_tokens += 1
            tokens.append(_replaced_token(tok, form, granularity == FINE))
    return AnnotatedSentence(id=sent.id, tokens=tokens,
                             main_verb=sent.main_verb, np_spans=sent.np_spans)


def replace_word_verb(sent: AnnotatedSentence, table: FrequencyTable,
                      rng: np.random.Generator, granularity: str = COARSE,
                      stats: Optional[PerturbStats] = None) -> AnnotatedSentence:
    """Replace co-occurring content words, keeping the main verb fixed."""
    keep = {sent.main_verb} if sent.main_verb is not None else set()
    return _replace(sent, table, rng, keep, REPLACEABLE_UPOS, granularity, stats)


def replace_word_noun(sent: AnnotatedSentence, table: FrequencyTable,
                      rng: np.random.Generator, granularity: str = COARSE,
                      stats: Optional[PerturbStats] = None) -> AnnotatedSentence:
    """Keep one uniformly chosen noun; replace all other content words."""
    noun_positions = [i for i, t in enumerate(sent.tokens) if t.upos == "NOUN"]
    keep: set[int] = set()
    if noun_positions:
        keep = {noun_positions[int(rng.integers(len(noun_positions)))]}
    out = _replace(sent, table, rng, keep, {"NOUN", "ADJ", "ADV"},
                   granularity, stats)
    # a replaced verb invalidates the main-verb annotation
    return AnnotatedSentence(id=out.id, tokens=out.tokens, main_verb=None,
                             np_spans=out.np_spans)


def _final_punct_pinned(sent: AnnotatedSentence) -> bool:
    if not sent.tokens:
        return False
    last = sent.tokens[-1]
    return last.upos == "PUNCT" or last.form in {".", "!", "?", ",", ";", ":"}


def _permute_blocks(sent: AnnotatedSentence, blocks: list[tuple[int, int]],
                    rng: np.random.Generator,
                    keep_spans: bool) -> AnnotatedSentence:
    pin_last = _final_punct_pinned(sent)
    if pin_last:
        free = [b for b in blocks if b[1] <= len(sent.tokens) - 1]
        pinned = [b for b in blocks if b[1] > len(sent.tokens) - 1]
    else:
        free, pinned = list(blocks), []
    order = np.arange(len(free))
    rng.shuffle(order)
    tokens: list[Token] = []
    new_spans: list[tuple[int, int]] = []
    span_set = set(sent.np_spans)
    for bi in list(order) + list(range(len(free), len(free) + len(pinned))):
        block = free[bi] if bi < len(free) else pinned[bi - len(free)]
        start = len(tokens)
        tokens.extend(sent.tokens[block[0]:block[1]])
        if keep_spans and block in span_set:
            new_spans.append((start, start + (block[1] - block[0])))
    return AnnotatedSentence(id=sent.id, tokens=tokens, main_verb=None,
                             np_spans=tuple(new_spans) if keep_spans else ())


def shuffle_1gram(sent: AnnotatedSentence,
                  rng: np.random.Generator) -> AnnotatedSentence:
    """Unbiased token shuffle with sentence-final punctuation pinned."""
    blocks = [(i, i + 1) for i in range(len(sent.tokens))]
    return _permute_blocks(sent, blocks, rng, keep_spans=False)


def shuffle_np(sent: AnnotatedSentence,
               rng: np.random.Generator) -> AnnotatedSentence:
    """Shuffle treating each base-NP span as one atomic block."""
    blocks: list[tuple[int, int]] = []
    i = 0
    spans = iter(sent.np_spans)
    nxt = next(spans, None)
    n = len(sent.tokens)
    while i < n:
        if nxt is not None and nxt[0] == i:
            blocks.append(nxt)
            i = nxt[1]
            nxt = next(spans, None)
        else:
            blocks.append((i, i + 1))
            i += 1
    return _permute_blocks(sent, blocks, rng, keep_spans=True)


def perturb_sentence(sent: AnnotatedSentence, spec: PerturbationSpec,
                     table: Optional[FrequencyTable],
                     rng: np.random.Generator,
                     stats: Optional[PerturbStats] = None) -> AnnotatedSentence:
    if spec.kind == "original":
        return sent
    if spec.kind == "replace_word_verb":
        return replace_word_verb(sent, table, rng, spec.granularity, stats)
    if spec.kind == "replace_word_noun":
        return replace_word_noun(sent, table, rng, spec.granularity, stats)
    if spec.kind == "shuffle_1gram":
        return shuffle_1gram(sent, rng)
    return shuffle_np(sent, rng)


def perturb_corpus(corpus: CorpusSplit, spec: PerturbationSpec,
                   table: Optional[FrequencyTable] = None,
                   stats: Optional[PerturbStats] = None) -> CorpusSplit:
    """Apply one perturbation to a whole split, one RNG stream per sentence."""
    if spec.kind.startswith("replace") and table is None:
        raise PerturbError(f"{spec.kind} requires a frequency table")
    if stats is None:
        stats = PerturbStats()
    out = []
    for ordinal, sent in enumerate(corpus):
        rng = sentence_rng(spec.seed, corpus.name, ordinal)
        out.append(perturb_sentence(sent, spec, table, rng, stats))
        stats.sentences += 1
    return CorpusSplit(name=corpus.name, sentences=out)
