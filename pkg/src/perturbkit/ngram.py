"""Interpolated Kneser-Ney n-gram language model.

Self-contained stand-in for a neural LM so the whole pipeline (train on
perturbed corpora, answer eval sets, score) runs end-to-end.  Uses a
single absolute discount and continuation counts for the lower orders;
model files are sorted plain text with deterministic bytes.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"


class NGramError(ValueError):
    pass


@dataclass
class NGramModel:
    order: int = 3
    discount: float = 0.75
    unk_threshold: int = 2
    vocab: frozenset = frozenset()
    # raw suffix counts per level, keyed by token tuple
    counts: list = field(default_factory=list)  # counts[k] for (k+1)-grams
    _derived: dict = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if not 0.0 < self.discount < 1.0:
            raise NGramError("discount must lie in (0, 1)")
        if self.order < 1:
            raise NGramError("order must be >= 1")

    # -- derived tables -------------------------------------------------------

    def _build_derived(self) -> None:
        d = {}
        top = self.counts[self.order - 1]
        ctx_total: dict = defaultdict(int)
        ctx_types: dict = defaultdict(int)
        for gram, c in top.items():
            ctx = gram[:-1]
            ctx_total[ctx] += c
            ctx_types[ctx] += 1
        d["top_ctx"] = (dict(ctx_total), dict(ctx_types))
        # continuation counts for levels 1..order-1, from raw level k+1
        d["cont"] = {}
        for k in range(self.order - 1, 0, -1):
            higher = self.counts[k]  # (k+1)-grams
            cc: dict = defaultdict(int)
            for gram in higher:
                cc[gram[1:]] += 1
            cc_ctx_total: dict = defaultdict(int)
            cc_ctx_types: dict = defaultdict(int)
            for gram, c in cc.items():
                ctx = gram[:-1]
                cc_ctx_total[ctx] += c
                cc_ctx_types[ctx] += 1
            d["cont"][k] = (dict(cc), dict(cc_ctx_total), dict(cc_ctx_types))
        d["uniform"] = 1.0 / (len(self.vocab) + 1)  # vocab plus </s>
        self._derived = d

    @property
    def _tables(self) -> dict:
        if not self._derived:
            self._build_derived()
        return self._derived

    # -- probability ----------------------------------------------------------

    def map_token(self, form: str) -> str:
        return form if form in self.vocab or form == EOS else UNK

    def _prob(self, context: tuple, w: str, level: int) -> float:
        """P(w | context) at ``level`` (context length level-1)."""
        d = self.discount
        t = self._tables
        if level == 0:
            return t["uniform"]
        if level == self.order:
            counts = self.counts[level - 1]
            ctx_total, ctx_types = t["top_ctx"]
            total = ctx_total.get(context, 0)
            if total == 0:
                return self._prob(context[1:], w, level - 1)
            c = counts.get(context + (w,), 0)
            types = ctx_types[context]
            return (max(c - d, 0.0) + d * types * self._prob(context[1:], w, level - 1)) / total
        cc, cc_total, cc_types = t["cont"][level]
        total = cc_total.get(context, 0)
        if total == 0:
            return self._prob(context[1:], w, level - 1)
        c = cc.get(context + (w,), 0)
        types = cc_types[context]
        return (max(c - d, 0.0) + d * types * self._prob(context[1:], w, level - 1)) / total

    def cond_prob(self, context: Sequence[str], w: str) -> float:
        """P(w | last order-1 context tokens); tokens are mapped to <unk>."""
        ctx = tuple(self.map_token(c) if c != BOS else BOS
                    for c in context)[-(self.order - 1):] if self.order > 1 else ()
        return self._prob(ctx, self.map_token(w), self.order)

    def padded(self, tokens: Sequence[str]) -> list[str]:
        return [BOS] * (self.order - 1) + [self.map_token(t) for t in tokens] + [EOS]

    def sentence_logprob(self, tokens: Sequence[str]) -> float:
        seq = self.padded(tokens)
        n = self.order
        total = 0.0
        for i in range(n - 1, len(seq)):
            total += math.log(self._prob(tuple(seq[i - n + 1:i]), seq[i], n))
        return total

    def masked_argmax(self, tokens: Sequence[str], mask_index: int,
                      candidates: Sequence[str]) -> str:
        """Candidate maximizing the summed log-probability of all n-gram
        windows overlapping the masked position; lexicographic tie-break."""
        if not candidates:
            raise NGramError("empty candidate set")
        if not 0 <= mask_index < len(tokens):
            raise NGramError("mask index out of range")
        scored = self.masked_scores(tokens, mask_index, candidates)
        best, best_score = None, -math.inf
        for cand in sorted(set(candidates)):
            s = scored[cand]
            if s > best_score:
                best, best_score = cand, s
        return best

    def masked_scores(self, tokens: Sequence[str], mask_index: int,
                      candidates: Sequence[str]) -> dict[str, float]:
        seq = self.padded(tokens)
        n = self.order
        m = mask_index + n - 1
        lo, hi = m, min(len(seq) - 1, m + n - 1)
        out: dict[str, float] = {}
        for cand in set(candidates):
            seq[m] = self.map_token(cand)
            s = 0.0
            for i in range(lo, hi + 1):
                s += math.log(self._prob(tuple(seq[i - n + 1:i]), seq[i], n))
            out[cand] = s
        return out

    # -- persistence ----------------------------------------------------------

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# perturbkit-ngram\tv1\torder={self.order}\t"
                     f"d={self.discount!r}\tunk_threshold={self.unk_threshold}\n")
            for w in sorted(self.vocab):
                fh.write(f"V\t{w}\n")
            for k in range(self.order):
                level = self.counts[k]
                for gram in sorted(level):
                    fh.write(f"{k + 1}\t{' '.join(gram)}\t{level[gram]}\n")

    @classmethod
    def load(cls, path) -> "NGramModel":
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n")
            if not header.startswith("# perturbkit-ngram"):
                raise NGramError("not an n-gram model file")
            meta = dict(kv.split("=", 1) for kv in header.split("\t")[2:])
            model = cls(order=int(meta["order"]), discount=float(meta["d"]),
                        unk_threshold=int(meta["unk_threshold"]))
            model.counts = [Counter() for _ in range(model.order)]
            vocab = set()
            for line in fh:
                kind, _, rest = line.rstrip("\n").partition("\t")
                if kind == "V":
                    vocab.add(rest)
                else:
                    gram, _, c = rest.rpartition("\t")
                    model.counts[int(kind) - 1][tuple(gram.split(" "))] = int(c)
            model.vocab = frozenset(vocab)
        return model


def train_ngram(lines: Iterable[str], order: int = 3, unk_threshold: int = 2,
                discount: float = 0.75) -> NGramModel:
    """Count-based training from space-separated token lines."""
    sentences = []
    raw = Counter()
    for line in lines:
        toks = line.split()
        if toks:
            sentences.append(toks)
            raw.update(toks)
    if not sentences:
        raise NGramError("empty training corpus")
    vocab = frozenset(w for w, c in raw.items() if c >= unk_threshold) | {UNK}
    model = NGramModel(order=order, discount=discount,
                       unk_threshold=unk_threshold, vocab=vocab)
    counts = [Counter() for _ in range(order)]
    n = order
    for toks in sentences:
        seq = [BOS] * (n - 1) + [t if t in vocab else UNK for t in toks] + [EOS]
        for i in range(n - 1, len(seq)):
            for k in range(1, n + 1):
                counts[k - 1][tuple(seq[i - k + 1:i + 1])] += 1
    model.counts = counts
    return model


def train_ngram_file(path, order: int = 3, unk_threshold: int = 2,
                     discount: float = 0.75) -> NGramModel:
    with open(path, encoding="utf-8") as fh:
        return train_ngram(fh, order=order, unk_threshold=unk_threshold,
                           discount=discount)
