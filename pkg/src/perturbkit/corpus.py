"""Corpus representation and I/O: raw utterance lines and CoNLL-U.

Sentences are sequences of tokens carrying optional PoS / dependency
annotations, base-NP spans, and a main-verb index.  All writers emit
deterministic, LF-terminated UTF-8 bytes.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Optional, Sequence, Tuple

PUNCT_SPLIT = set(".,!?;:")

UPOS_TAGS = (
    "ADJ ADP ADV AUX CCONJ DET INTJ NOUN NUM PART PRON PROPN "
    "PUNCT SCONJ SYM VERB X"
).split()


class CorpusError(ValueError):
    """Malformed corpus input."""


@dataclass(frozen=True)
class Token:
    form: str
    upos: Optional[str] = None
    xpos: Optional[str] = None
    head: Optional[int] = None
    deprel: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.form or any(c.isspace() for c in self.form):
            raise CorpusError(f"bad token form: {self.form!r}")


@dataclass
class AnnotatedSentence:
    id: str
    tokens: list[Token]
    main_verb: Optional[int] = None
    np_spans: Tuple[Tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        n = len(self.tokens)
        spans = tuple(sorted(tuple(s) for s in self.np_spans))
        for start, end in spans:
            if not (0 <= start < end <= n):
                raise CorpusError(f"{self.id}: span ({start},{end}) out of bounds")
        for (_, e1), (s2, _) in zip(spans, spans[1:]):
            if s2 < e1:
                raise CorpusError(f"{self.id}: overlapping np_spans")
        object.__setattr__(self, "np_spans", spans)
        if self.main_verb is not None:
            if not 0 <= self.main_verb < n:
                raise CorpusError(f"{self.id}: main_verb index out of bounds")
            if self.tokens[self.main_verb].upos != "VERB":
                raise CorpusError(f"{self.id}: main_verb token is not a VERB")

    @property
    def forms(self) -> list[str]:
        return [t.form for t in self.tokens]

    def with_tokens(self, tokens: Sequence[Token], **kw) -> "AnnotatedSentence":
        return AnnotatedSentence(id=self.id, tokens=list(tokens), **kw)


@dataclass
class CorpusSplit:
    name: str
    sentences: list[AnnotatedSentence]

    def __post_init__(self) -> None:
        seen = set()
        for s in self.sentences:
            if s.id in seen:
                raise CorpusError(f"duplicate sentence id {s.id!r} in split {self.name}")
            seen.add(s.id)

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self) -> Iterator[AnnotatedSentence]:
        return iter(self.sentences)


@dataclass
class IngestStats:
    read: int = 0
    emitted: int = 0
    skipped_empty: int = 0
    skipped_too_long: int = 0


def tokenize(line: str) -> list[str]:
    """Word-level tokenization: lower-case, peel ``. , ! ? ; :`` off chunk
    edges into their own tokens, keep apostrophe-internal strings whole."""
    out: list[str] = []
    for chunk in line.lower().split():
        left: list[str] = []
        while chunk and chunk[0] in PUNCT_SPLIT:
            left.append(chunk[0])
            chunk = chunk[1:]
        right: list[str] = []
        while chunk and chunk[-1] in PUNCT_SPLIT:
            right.append(chunk[-1])
            chunk = chunk[:-1]
        out.extend(left)
        if chunk:
            out.append(chunk)
        out.extend(reversed(right))
    return out


def detokenize(sentence: AnnotatedSentence) -> str:
    """Render a sentence as space-joined token forms."""
    return " ".join(sentence.forms)


def ingest_raw(
    lines: Iterable[str],
    split: str = "train",
    annotator=None,
    max_tokens: int = 512,
    stats: Optional[IngestStats] = None,
) -> Iterator[AnnotatedSentence]:
    """Turn utterance-per-line text into sentences.

    ``annotator``, when given, is called on each bare sentence and must
    return the sentence with upos / np_spans / main_verb filled in.
    Empty and over-long lines are skipped and counted in ``stats``.
    """
    if stats is None:
        stats = IngestStats()
    for lineno, line in enumerate(lines, start=1):
        stats.read += 1
        forms = tokenize(line)
        if not forms:
            stats.skipped_empty += 1
            continue
        if len(forms) > max_tokens:
            stats.skipped_too_long += 1
            continue
        sent = AnnotatedSentence(id=f"{split}-{lineno}", tokens=[Token(f) for f in forms])
        if annotator is not None:
            sent = annotator(sent)
        stats.emitted += 1
        yield sent


def read_raw_file(path, split: str = "train", annotator=None,
                  max_tokens: int = 512, stats: Optional[IngestStats] = None) -> CorpusSplit:
    with open(path, encoding="utf-8") as fh:
        sentences = list(ingest_raw(fh, split=split, annotator=annotator,
                                    max_tokens=max_tokens, stats=stats))
    return CorpusSplit(name=split, sentences=sentences)


def write_raw(split: CorpusSplit, fh: io.TextIOBase) -> None:
    for sent in split:
        fh.write(detokenize(sent))
        fh.write("\n")


def write_raw_file(split: CorpusSplit, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        write_raw(split, fh)


# --- CoNLL-U -----------------------------------------------------------------

_NFIELDS = 10


def ingest_conllu(fh: Iterable[str], split: str = "train") -> Iterator[AnnotatedSentence]:
    """Parse CoNLL-U blocks.  Multiword-token range lines are dropped in
    favor of their parts; comment lines other than ``# sent_id`` are ignored."""
    tokens: list[Token] = []
    sent_id: Optional[str] = None
    ordinal = 0

    def flush():
        nonlocal tokens, sent_id, ordinal
        if tokens:
            ordinal += 1
            sid = sent_id or f"{split}-{ordinal}"
            yield AnnotatedSentence(id=sid, tokens=tokens)
        tokens = []
        sent_id = None

    for lineno, line in enumerate(fh, start=1):
        line = line.rstrip("\n")
        if not line:
            yield from flush()
            continue
        if line.startswith("#"):
            if line[1:].strip().startswith("sent_id"):
                _, _, value = line.partition("=")
                sent_id = value.strip()
            continue
        cols = line.split("\t")
        if len(cols) != _NFIELDS:
            raise CorpusError(f"line {lineno}: expected {_NFIELDS} columns, got {len(cols)}")
        idx = cols[0]
        if "-" in idx or "." in idx:  # multiword ranges and empty nodes
            continue
        head: Optional[int] = None
        if cols[6] not in ("_", ""):
            try:
                head = int(cols[6])
            except ValueError:
                raise CorpusError(f"line {lineno}: non-integer head {cols[6]!r}") from None
        tokens.append(Token(
            form=cols[1],
            upos=None if cols[3] == "_" else cols[3],
            xpos=None if cols[4] == "_" else cols[4],
            head=head,
            deprel=None if cols[7] == "_" else cols[7],
        ))
    yield from flush()


def read_conllu_file(path, split: str = "train") -> CorpusSplit:
    with open(path, encoding="utf-8") as fh:
        sentences = list(ingest_conllu(fh, split=split))
    return CorpusSplit(name=split, sentences=sentences)


def write_conllu(split: CorpusSplit, fh: io.TextIOBase) -> None:
    for sent in split:
        fh.write(f"# sent_id = {sent.id}\n")
        for i, tok in enumerate(sent.tokens, start=1):
            cols = [
                str(i),
                tok.form,
                "_",
                tok.upos or "_",
                tok.xpos or "_",
                "_",
                "_" if tok.head is None else str(tok.head),
                tok.deprel or "_",
                "_",
                "_",
            ]
            fh.write("\t".join(cols))
            fh.write("\n")
        fh.write("\n")


def write_conllu_file(split: CorpusSplit, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        write_conllu(split, fh)
