"""Build the targeted evaluation sets: masked word prediction and
minimal-pair judgment items for verbs and nouns.

Items are always drawn from unperturbed test text, so one eval file
serves every model condition; files are line-delimited JSON with a fixed
field order for hash stability.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .corpus import AnnotatedSentence, CorpusSplit
from .lexicon import BinTable, InsufficientBin
from .perturb import sentence_rng
from .score_words import classify_word

HEADER = "# perturbkit eval records v1"


class EvalGenError(ValueError):
    pass


@dataclass(frozen=True)
class VocabPredicate:
    forms: frozenset

    def __post_init__(self) -> None:
        if not self.forms:
            raise EvalGenError("empty vocabulary predicate")

    def __contains__(self, form: str) -> bool:
        return form in self.forms

    @classmethod
    def from_file(cls, path) -> "VocabPredicate":
        with open(path, encoding="utf-8") as fh:
            forms = frozenset(line.strip() for line in fh if line.strip())
        return cls(forms=forms)


@dataclass
class MaskedItem:
    id: str
    source_sentence_id: str
    tokens: list[str]
    mask_index: int
    answer: str
    target_pos: str
    word_class: str

    def __post_init__(self) -> None:
        if self.tokens[self.mask_index] != self.answer:
            raise EvalGenError(f"{self.id}: answer does not match masked token")


@dataclass
class MinimalPairItem:
    id: str
    source_sentence_id: str
    tokens: list[str]
    target_index: int
    answer: str
    alternatives: list[str]
    target_pos: str
    word_class: str
    bin: int

    def __post_init__(self) -> None:
        if self.tokens[self.target_index] != self.answer:
            raise EvalGenError(f"{self.id}: answer does not match target token")
        if len(set(self.alternatives)) != len(self.alternatives):
            raise EvalGenError(f"{self.id}: duplicate alternatives")
        if self.answer in self.alternatives:
            raise EvalGenError(f"{self.id}: answer listed as alternative")


@dataclass
class EvalGenStats:
    candidates: int = 0
    emitted: int = 0
    skipped_no_target: int = 0
    skipped_vocab: int = 0
    skipped_short: int = 0
    skipped_insufficient_bin: int = 0


def _target_index(sent: AnnotatedSentence, target_pos: str,
                  rng: np.random.Generator) -> Optional[int]:
    if target_pos == "VERB":
        return sent.main_verb
    nouns = [i for i, t in enumerate(sent.tokens) if t.upos == "NOUN"]
    if not nouns:
        return None
    return nouns[int(rng.integers(len(nouns)))]


def _word_class(form: str, target_pos: str) -> str:
    return classify_word(form, target_pos)


def build_masked_set(test: CorpusSplit, target_pos: str, vocab: VocabPredicate,
                     seed: int = 0,
                     stats: Optional[EvalGenStats] = None) -> list[MaskedItem]:
    """One masked item per qualifying sentence; the answer must satisfy the
    vocabulary predicate (single-token under the downstream tokenizer)."""
    if target_pos not in ("VERB", "NOUN"):
        raise EvalGenError(f"unsupported target pos {target_pos!r}")
    if stats is None:
        stats = EvalGenStats()
    items: list[MaskedItem] = []
    for ordinal, sent in enumerate(test):
        stats.candidates += 1
        rng = sentence_rng(seed, f"masked-{test.name}", ordinal)
        idx = _target_index(sent, target_pos, rng)
        if idx is None:
            stats.skipped_no_target += 1
            continue
        answer = sent.tokens[idx].form
        if answer not in vocab:
            stats.skipped_vocab += 1
            continue
        items.append(MaskedItem(
            id=f"masked-{target_pos.lower()}-{len(items)}",
            source_sentence_id=sent.id,
            tokens=sent.forms,
            mask_index=idx,
            answer=answer,
            target_pos=target_pos,
            word_class=_word_class(answer, target_pos),
        ))
        stats.emitted += 1
    return items


def build_minimal_pairs(test: CorpusSplit, target_pos: str, bins: BinTable,
                        n_alt: int = 5, min_len: int = 10,
                        count_punct: bool = True, seed: int = 0,
                        stats: Optional[EvalGenStats] = None) -> list[MinimalPairItem]:
    """Minimal-pair items for sentences longer than ``min_len`` tokens, with
    ``n_alt`` same-bin alternatives per item."""
    if target_pos not in ("VERB", "NOUN"):
        raise EvalGenError(f"unsupported target pos {target_pos!r}")
    if stats is None:
        stats = EvalGenStats()
    items: list[MinimalPairItem] = []
    for ordinal, sent in enumerate(test):
        stats.candidates += 1
        length = len(sent.tokens)
        if not count_punct:
            length = sum(1 for t in sent.tokens if t.upos != "PUNCT")
        if length <= min_len:
            stats.skipped_short += 1
            continue
        rng = sentence_rng(seed, f"pairs-{test.name}", ordinal)
        idx = _target_index(sent, target_pos, rng)
        if idx is None:
            stats.skipped_no_target += 1
            continue
        answer = sent.tokens[idx].form
        if (target_pos, answer) not in bins.bins:
            stats.skipped_vocab += 1
            continue
        try:
            alternatives = _sample_alternatives(bins, target_pos, answer, n_alt, rng)
        except InsufficientBin:
            stats.skipped_insufficient_bin += 1
            continue
        items.append(MinimalPairItem(
            id=f"pair-{target_pos.lower()}-{len(items)}",
            source_sentence_id=sent.id,
            tokens=sent.forms,
            target_index=idx,
            answer=answer,
            alternatives=alternatives,
            target_pos=target_pos,
            word_class=_word_class(answer, target_pos),
            bin=bins.bin_of(target_pos, answer),
        ))
        stats.emitted += 1
    return items


def _sample_alternatives(bins: BinTable, pos_key: str, answer: str,
                         n_alt: int, rng: np.random.Generator) -> list[str]:
    from .lexicon import sample_same_bin
    return sample_same_bin(bins, pos_key, answer, n_alt, (), rng)


# --- serialization -----------------------------------------------------------

_MASKED_FIELDS = ("id", "task", "source_sentence_id", "tokens", "mask_index",
                  "answer", "target_pos", "word_class")
_PAIR_FIELDS = ("id", "task", "source_sentence_id", "tokens", "target_index",
                "answer", "alternatives", "target_pos", "word_class", "bin")


def item_to_record(item) -> dict:
    if isinstance(item, MaskedItem):
        rec = {"id": item.id, "task": "masked",
               "source_sentence_id": item.source_sentence_id,
               "tokens": item.tokens, "mask_index": item.mask_index,
               "answer": item.answer, "target_pos": item.target_pos,
               "word_class": item.word_class}
    else:
        rec = {"id": item.id, "task": "minimal_pair",
               "source_sentence_id": item.source_sentence_id,
               "tokens": item.tokens, "target_index": item.target_index,
               "answer": item.answer, "alternatives": item.alternatives,
               "target_pos": item.target_pos, "word_class": item.word_class,
               "bin": item.bin}
    return rec


def write_eval_records(items: Iterable, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(HEADER + "\n")
        for item in items:
            fh.write(json.dumps(item_to_record(item), ensure_ascii=False))
            fh.write("\n")


def read_eval_records(path) -> list:
    items: list = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise EvalGenError(f"record {lineno}: invalid JSON ({exc})") from None
            items.append(record_to_item(rec, lineno))
    return items


def record_to_item(rec: dict, lineno: int = 0):
    task = rec.get("task")
    fields = _MASKED_FIELDS if task == "masked" else _PAIR_FIELDS
    if task not in ("masked", "minimal_pair"):
        raise EvalGenError(f"record {lineno}: unknown task {task!r}")
    missing = [f for f in fields if f not in rec]
    if missing:
        raise EvalGenError(f"record {lineno}: missing fields {missing}")
    try:
        if task == "masked":
            return MaskedItem(
                id=rec["id"], source_sentence_id=rec["source_sentence_id"],
                tokens=list(rec["tokens"]), mask_index=int(rec["mask_index"]),
                answer=rec["answer"], target_pos=rec["target_pos"],
                word_class=rec["word_class"])
        return MinimalPairItem(
            id=rec["id"], source_sentence_id=rec["source_sentence_id"],
            tokens=list(rec["tokens"]), target_index=int(rec["target_index"]),
            answer=rec["answer"], alternatives=list(rec["alternatives"]),
            target_pos=rec["target_pos"], word_class=rec["word_class"],
            bin=int(rec["bin"]))
    except EvalGenError as exc:
        raise EvalGenError(f"record {lineno}: {exc}") from None
