"""Per-PoS frequency statistics, frequency-weighted sampling, and the
four-way log-rank bins used to pick difficulty-matched alternatives.

All sampling takes a caller-supplied numpy Generator so replacement
streams stay reproducible under parallel corpus processing.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .corpus import AnnotatedSentence

COARSE = "coarse"
FINE = "fine"


class LexiconError(ValueError):
    pass


class InsufficientBin(LexiconError):
    """A bin cell has too few forms to sample the requested alternatives."""

    def __init__(self, cell_size: int, requested: int):
        super().__init__(f"bin cell has {cell_size} usable forms, need {requested}")
        self.cell_size = cell_size
        self.requested = requested


@dataclass
class _PosClass:
    """Sorted forms of one PoS class with cumulative counts for O(log V) draws."""

    forms: list[str]
    counts: np.ndarray
    cumulative: np.ndarray
    index: dict[str, int]

    @classmethod
    def build(cls, counter: Counter) -> "_PosClass":
        forms = sorted(counter)
        counts = np.array([counter[f] for f in forms], dtype=np.float64)
        return cls(forms=forms, counts=counts,
                   cumulative=np.cumsum(counts),
                   index={f: i for i, f in enumerate(forms)})


@dataclass
class FrequencyTable:
    granularity: str = COARSE
    counts: dict[str, Counter] = field(default_factory=lambda: defaultdict(Counter))
    _classes: dict[str, _PosClass] = field(default_factory=dict, repr=False)

    def add(self, pos_key: str, form: str, n: int = 1) -> None:
        self.counts[pos_key][form] += n
        self._classes.pop(pos_key, None)

    def total(self, pos_key: str) -> int:
        return sum(self.counts[pos_key].values())

    def pos_keys(self) -> list[str]:
        return sorted(self.counts)

    def class_of(self, pos_key: str) -> _PosClass:
        if pos_key not in self.counts:
            raise LexiconError(f"unknown pos key {pos_key!r}")
        cached = self._classes.get(pos_key)
        if cached is None:
            cached = _PosClass.build(self.counts[pos_key])
            self._classes[pos_key] = cached
        return cached

    def write_tsv(self, path, bins: Optional["BinTable"] = None) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("pos\tform\tcount\tbin\n")
            for pos in sorted(self.counts):
                for form in sorted(self.counts[pos]):
                    b = bins.bins.get((pos, form), "") if bins else ""
                    fh.write(f"{pos}\t{form}\t{self.counts[pos][form]}\t{b}\n")


def pos_key_of(token, granularity: str) -> Optional[str]:
    if granularity == FINE:
        return token.xpos
    return token.upos


def build_frequency_table(corpus: Iterable[AnnotatedSentence],
                          granularity: str = COARSE) -> FrequencyTable:
    table = FrequencyTable(granularity=granularity)
    missing_fine = 0
    for sent in corpus:
        for tok in sent.tokens:
            key = pos_key_of(tok, granularity)
            if key is None:
                if granularity == FINE:
                    missing_fine += 1
                continue
            table.counts[key][tok.form] += 1
    if granularity == FINE and missing_fine and not table.counts:
        raise LexiconError("corpus has no xpos annotations; use coarse granularity")
    if granularity == FINE and missing_fine:
        raise LexiconError(
            f"{missing_fine} tokens lack xpos; use coarse granularity or supply xpos")
    if granularity == COARSE:
        untagged = not table.counts
        if untagged:
            raise LexiconError("corpus has no PoS annotations")
    return table


@dataclass
class BinTable:
    k: int
    bins: dict[tuple[str, str], int] = field(default_factory=dict)
    boundaries: dict[str, list[float]] = field(default_factory=dict)
    _cells: dict[tuple[str, int], list[str]] = field(default_factory=dict, repr=False)

    def bin_of(self, pos_key: str, form: str) -> int:
        try:
            return self.bins[(pos_key, form)]
        except KeyError:
            raise LexiconError(f"form {form!r} not binned under {pos_key!r}") from None

    def cell(self, pos_key: str, bin_id: int) -> list[str]:
        return self._cells.get((pos_key, bin_id), [])

    def write_tsv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("pos\tform\tbin\n")
            for (pos, form) in sorted(self.bins):
                fh.write(f"{pos}\t{form}\t{self.bins[(pos, form)]}\n")


def ranked_forms(table: FrequencyTable, pos_key: str) -> list[str]:
    """Forms of one class by descending frequency, ties lexicographic."""
    cls = table.counts[pos_key]
    return sorted(cls, key=lambda f: (-cls[f], f))


def bin_by_log_rank(table: FrequencyTable, pos_key: str, k: int = 4) -> BinTable:
    """Map each form's ln(rank) into k equal-width intervals over [0, ln N].

    Rank 1 is the most frequent form; the top edge is inclusive, so the
    rarest form lands in bin k-1.
    """
    if pos_key not in table.counts:
        raise LexiconError(f"unknown pos key {pos_key!r}")
    forms = ranked_forms(table, pos_key)
    n = len(forms)
    if n < k:
        raise LexiconError(f"{pos_key}: {n} forms, need at least {k} to build {k} bins")
    out = BinTable(k=k)
    ln_n = math.log(n)
    width = ln_n / k
    edges = [i * width for i in range(k + 1)]
    out.boundaries[pos_key] = edges
    for rank, form in enumerate(forms, start=1):
        b = min(k - 1, int(math.log(rank) / width)) if width > 0 else 0
        out.bins[(pos_key, form)] = b
        out._cells.setdefault((pos_key, b), []).append(form)
    return out


def merge_bin_tables(tables: Iterable[BinTable]) -> BinTable:
    tables = list(tables)
    out = BinTable(k=tables[0].k if tables else 4)
    for t in tables:
        out.bins.update(t.bins)
        out.boundaries.update(t.boundaries)
        out._cells.update(t._cells)
    return out


def sample_same_pos(table: FrequencyTable, pos_key: str, exclude: Optional[str],
                    rng: np.random.Generator) -> tuple[str, bool]:
    """Draw a form with probability proportional to its count, from the class
    minus ``exclude``.  Returns ``(form, changed)``; a class equal to
    {exclude} passes the form through with ``changed=False``.
    """
    cls = table.class_of(pos_key)
    total = cls.cumulative[-1]
    ex_idx = cls.index.get(exclude, -1) if exclude is not None else -1
    if ex_idx >= 0:
        ex_count = cls.counts[ex_idx]
        usable = total - ex_count
        if usable <= 0:
            return exclude, False
        r = rng.random() * usable
        # shift the draw past the excluded form's probability mass
        before = cls.cumulative[ex_idx] - ex_count
        if r >= before:
            r += ex_count
    else:
        r = rng.random() * total
    i = int(np.searchsorted(cls.cumulative, r, side="right"))
    i = min(i, len(cls.forms) - 1)
    return cls.forms[i], True


def sample_same_bin(bins: BinTable, pos_key: str, form: str, n: int,
                    exclude: Iterable[str], rng: np.random.Generator) -> list[str]:
    """n distinct forms uniform without replacement from form's bin cell,
    never returning ``form`` or anything in ``exclude``."""
    if n == 0:
        return []
    b = bins.bin_of(pos_key, form)
    banned = set(exclude) | {form}
    pool = [f for f in bins.cell(pos_key, b) if f not in banned]
    if len(pool) < n:
        raise InsufficientBin(len(pool), n)
    idx = rng.choice(len(pool), size=n, replace=False)
    return [pool[i] for i in idx]
