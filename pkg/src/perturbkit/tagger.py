"""Averaged-perceptron PoS tagger, base-NP chunker, and main-verb finder.

The tagger follows the classic averaged-perceptron recipe: sparse string
features, greedy left-to-right decoding, averaged weights.  Model files are
plain sorted text so a trained model serializes to deterministic bytes.
"""

from __future__ import annotations

import random
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Tuple

from .corpus import AnnotatedSentence, CorpusSplit, Token

MODEL_FORMAT_VERSION = 1

# Tokens eligible for base-NP membership.
NP_UPOS = {"DET", "NUM", "ADJ", "NOUN", "PROPN", "PRON"}
SUBORDINATORS = {"because", "when", "if", "that", "while", "since", "until",
                 "after", "before", "unless"}

_START = ("-START-", "-START2-")
_END = ("-END-", "-END2-")


class TaggerError(ValueError):
    pass


def _shape(word: str) -> str:
    if word.isdigit():
        return "d"
    shape = []
    for c in word:
        if c.isalpha():
            shape.append("x")
        elif c.isdigit():
            shape.append("d")
        else:
            shape.append(c)
    return "".join(shape[:4])


def _features(i: int, word: str, context: Sequence[str],
              prev: str, prev2: str) -> list[str]:
    # context is padded by two slots on each side; i indexes the padded list
    w_prev = context[i - 1]
    w_prev2 = context[i - 2]
    w_next = context[i + 1]
    w_next2 = context[i + 2]
    feats = [
        "bias",
        f"w={word}",
        f"suf1={word[-1:]}",
        f"suf2={word[-2:]}",
        f"suf3={word[-3:]}",
        f"pre1={word[:1]}",
        f"pre2={word[:2]}",
        f"pre3={word[:3]}",
        f"shape={_shape(word)}",
        f"t-1={prev}",
        f"t-2={prev2}",
        f"t-1t-2={prev}+{prev2}",
        f"w-1={w_prev}",
        f"w-2={w_prev2}",
        f"w+1={w_next}",
        f"w+2={w_next2}",
        f"t-1w={prev}+{word}",
    ]
    return feats


@dataclass
class TaggerModel:
    """Feature weights plus the tag inventory.  Immutable after training."""

    weights: dict[str, dict[str, float]]
    tag_set: Tuple[str, ...]
    version: int = MODEL_FORMAT_VERSION
    majority_tag: str = "NOUN"

    def __post_init__(self) -> None:
        if not self.tag_set:
            raise TaggerError("empty tag set")
        tags = set(self.tag_set)
        for feat, per_tag in self.weights.items():
            unknown = set(per_tag) - tags
            if unknown:
                raise TaggerError(f"feature {feat!r} references unknown tags {unknown}")

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# perturbkit-tagger\tv{self.version}\n")
            fh.write(f"# tags\t{' '.join(self.tag_set)}\n")
            fh.write(f"# majority\t{self.majority_tag}\n")
            for feat in sorted(self.weights):
                for tag in sorted(self.weights[feat]):
                    w = self.weights[feat][tag]
                    if w != 0.0:
                        fh.write(f"{feat}\t{tag}\t{w!r}\n")

    @classmethod
    def load(cls, path) -> "TaggerModel":
        weights: dict[str, dict[str, float]] = defaultdict(dict)
        tag_set: Tuple[str, ...] = ()
        majority = "NOUN"
        version = MODEL_FORMAT_VERSION
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if line.startswith("#"):
                    key, _, value = line[1:].strip().partition("\t")
                    if key == "perturbkit-tagger":
                        version = int(value.lstrip("v"))
                    elif key == "tags":
                        tag_set = tuple(value.split())
                    elif key == "majority":
                        majority = value
                    continue
                feat, tag, w = line.split("\t")
                weights[feat][tag] = float(w)
        return cls(weights=dict(weights), tag_set=tag_set,
                   version=version, majority_tag=majority)


def _predict(model: TaggerModel, feats: Sequence[str]) -> str:
    if not model.weights:
        return model.majority_tag
    scores = dict.fromkeys(model.tag_set, 0.0)
    for f in feats:
        per_tag = model.weights.get(f)
        if per_tag:
            for tag, w in per_tag.items():
                scores[tag] += w
    # stable argmax: ties broken by tag_set order
    best = None
    best_score = float("-inf")
    for tag in model.tag_set:
        s = scores[tag]
        if s > best_score:
            best, best_score = tag, s
    return best


def tag(model: TaggerModel, forms: Sequence[str]) -> list[str]:
    """Greedy left-to-right decoding; one tag per input form."""
    if not forms:
        raise TaggerError("cannot tag an empty sentence")
    context = list(_START) + [f.lower() for f in forms] + list(_END)
    prev, prev2 = _START
    tags = []
    for i, word in enumerate(forms):
        feats = _features(i + 2, word.lower(), context, prev, prev2)
        t = _predict(model, feats)
        tags.append(t)
        prev2, prev = prev, t
    return tags


def train_tagger(gold: Iterable[AnnotatedSentence], epochs: int,
                 seed: int = 0) -> TaggerModel:
    """Averaged-perceptron training with a deterministic epoch shuffle."""
    sentences = list(gold)
    if not sentences:
        raise TaggerError("empty gold corpus")
    for s in sentences:
        for t in s.tokens:
            if t.upos is None:
                raise TaggerError(f"{s.id}: gold sentence missing upos")
    tag_counts = Counter(t.upos for s in sentences for t in s.tokens)
    tag_set = tuple(sorted(tag_counts))
    majority = max(tag_set, key=lambda t: (tag_counts[t], t))

    weights: dict[str, dict[str, float]] = defaultdict(lambda: defaultdict(float))
    totals: dict[str, dict[str, float]] = defaultdict(lambda: defaultdict(float))
    stamps: dict[str, dict[str, int]] = defaultdict(lambda: defaultdict(int))
    model = TaggerModel(weights={}, tag_set=tag_set, majority_tag=majority)
    model.weights = weights  # live view during training

    rng = random.Random(seed)
    step = 0

    def upd(feat: str, t: str, delta: float) -> None:
        totals[feat][t] += (step - stamps[feat][t]) * weights[feat][t]
        stamps[feat][t] = step
        weights[feat][t] += delta

    for _ in range(epochs):
        rng.shuffle(sentences)
        for sent in sentences:
            forms = [t.form.lower() for t in sent.tokens]
            context = list(_START) + forms + list(_END)
            prev, prev2 = _START
            for i, tok in enumerate(sent.tokens):
                feats = _features(i + 2, forms[i], context, prev, prev2)
                guess = _predict(model, feats)
                truth = tok.upos
                step += 1
                if guess != truth:
                    for f in feats:
                        upd(f, truth, 1.0)
                        upd(f, guess, -1.0)
                prev2, prev = prev, truth
    # average
    averaged: dict[str, dict[str, float]] = {}
    for feat, per_tag in weights.items():
        out = {}
        for t, w in per_tag.items():
            total = totals[feat][t] + (step - stamps[feat][t]) * w
            avg = total / step if step else 0.0
            if avg != 0.0:
                out[t] = round(avg, 6)
        if out:
            averaged[feat] = out
    return TaggerModel(weights=averaged, tag_set=tag_set, majority_tag=majority)


def evaluate_tagger(model: TaggerModel, gold: Iterable[AnnotatedSentence]) -> float:
    correct = total = 0
    for sent in gold:
        pred = tag(model, sent.forms)
        for p, t in zip(pred, sent.tokens):
            total += 1
            correct += p == t.upos
    return correct / total if total else 0.0


# --- base-NP chunking --------------------------------------------------------

_NP_PATTERN = re.compile(r"(?:R)|(?:P+)|(?:D?U*A*N+)")

_TAG_CODE = {"PRON": "R", "PROPN": "P", "DET": "D", "NUM": "U",
             "ADJ": "A", "NOUN": "N"}


def chunk_nps(sentence: AnnotatedSentence) -> Tuple[Tuple[int, int], ...]:
    """Left-to-right longest-match base-NP spans over upos tags.

    A span is a pronoun, a proper-noun run, or DET? NUM* ADJ* NOUN+.
    """
    codes = "".join(_TAG_CODE.get(t.upos or "", "-") for t in sentence.tokens)
    spans = []
    i = 0
    n = len(codes)
    while i < n:
        m = _NP_PATTERN.match(codes, i)
        if m and m.end() > m.start():
            spans.append((m.start(), m.end()))
            i = m.end()
        else:
            i += 1
    return tuple(spans)


# --- main-verb identification ------------------------------------------------

def _main_verb_by_deps(sentence: AnnotatedSentence) -> Optional[int]:
    heads = [t.head for t in sentence.tokens]
    if any(h is None for h in heads):
        return None
    # depth of each token in the dependency tree
    def depth(i: int) -> int:
        d = 0
        seen = set()
        while heads[i] != 0 and i not in seen:
            seen.add(i)
            i = heads[i] - 1
            d += 1
        return d

    verbs = [i for i, t in enumerate(sentence.tokens) if t.upos == "VERB"]
    if not verbs:
        return None
    roots = [i for i in verbs if heads[i] == 0]
    if roots:
        return roots[0]
    return min(verbs, key=lambda i: (depth(i), i))


def find_main_verb(sentence: AnnotatedSentence) -> Optional[int]:
    """Main verb via the dependency root when heads exist, else a heuristic:
    leftmost VERB whose clause is not opened by a subordinating conjunction."""
    by_deps = _main_verb_by_deps(sentence)
    if by_deps is not None:
        return by_deps
    verbs = [i for i, t in enumerate(sentence.tokens) if t.upos == "VERB"]
    if not verbs:
        return None
    subordinate: list[int] = []
    for i in verbs:
        # walk back to the start of the clause containing this verb
        j = i - 1
        is_sub = False
        while j >= 0:
            tok = sentence.tokens[j]
            if tok.upos == "PUNCT":
                break
            if tok.form.lower() in SUBORDINATORS or tok.upos == "SCONJ":
                is_sub = True
                break
            if tok.upos == "VERB":
                break
            j -= 1
        if not is_sub:
            return i
        subordinate.append(i)
    return subordinate[0]


def annotate(sentence: AnnotatedSentence, model: TaggerModel) -> AnnotatedSentence:
    """Fill upos, np_spans, and main_verb on a bare sentence."""
    tags = tag(model, sentence.forms)
    tokens = [Token(form=t.form, upos=u, xpos=t.xpos, head=t.head, deprel=t.deprel)
              for t, u in zip(sentence.tokens, tags)]
    out = AnnotatedSentence(id=sentence.id, tokens=tokens)
    out.np_spans = chunk_nps(out)
    out.main_verb = find_main_verb(out)
    return AnnotatedSentence(id=out.id, tokens=tokens,
                             main_verb=out.main_verb, np_spans=out.np_spans)


def annotate_split(split: CorpusSplit, model: TaggerModel) -> CorpusSplit:
    return CorpusSplit(name=split.name,
                       sentences=[annotate(s, model) for s in split])


def resolve_annotations(split: CorpusSplit) -> CorpusSplit:
    """Fill np_spans / main_verb on sentences that already carry upos
    (e.g. gold CoNLL-U), leaving existing tags untouched."""
    out = []
    for s in split:
        sent = AnnotatedSentence(id=s.id, tokens=list(s.tokens))
        sent.np_spans = chunk_nps(sent)
        sent.main_verb = find_main_verb(sent)
        out.append(AnnotatedSentence(id=s.id, tokens=list(s.tokens),
                                     main_verb=sent.main_verb,
                                     np_spans=sent.np_spans))
    return CorpusSplit(name=split.name, sentences=out)
