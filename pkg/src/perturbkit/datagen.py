"""Deterministic generator of child-directed-style utterances with gold
PoS tags.

Used by the demo pipeline and the test suite so everything runs without
external data.  Sentences come from weighted templates with Zipf-weighted
open-class slots and verb-object affinities, which gives the corpus both
word-order regularities and content-word co-occurrence structure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .corpus import AnnotatedSentence, CorpusSplit, Token

NOUNS = [
    "supper", "ball", "dog", "cat", "book", "juice", "milk", "truck", "bear",
    "baby", "shoe", "sock", "bath", "story", "cup", "spoon", "banana",
    "apple", "cookie", "bed", "chair", "table", "door", "window", "car",
    "bunny", "duck", "horse", "cow", "pig", "bird", "fish", "tree", "flower",
    "sun", "moon", "star", "hat", "coat", "button", "nose", "hand", "foot",
    "hair", "face", "tummy", "block", "tower", "puzzle", "picture", "crayon",
    "song", "game", "park", "garden", "kitchen", "room", "box", "bag",
    "beach", "mother", "birthday", "dinner", "breakfast",
]

# transitive physical verbs, each with its favorite objects
TRANSITIVE = {
    "eat": ["supper", "banana", "apple", "cookie", "dinner", "breakfast"],
    "take": ["bath", "ball", "book", "spoon", "bag"],
    "push": ["truck", "car", "door", "chair", "block"],
    "pull": ["sock", "door", "hair", "coat", "truck"],
    "play": ["game", "ball", "song", "puzzle"],
    "make": ["tower", "picture", "supper", "dinner", "face"],
    "call": ["dog", "cat", "baby", "mother"],
    "catch": ["ball", "fish", "bird", "bunny"],
    "put": ["shoe", "hat", "coat", "cup", "block"],
    "find": ["sock", "shoe", "ball", "crayon", "bear"],
    "say": ["story", "song"],
    "hold": ["cup", "spoon", "hand", "bear", "baby"],
    "open": ["door", "window", "box", "book", "bag"],
    "wash": ["hand", "face", "cup", "hair", "foot"],
    "throw": ["ball", "sock", "block"],
    "read": ["book", "story"],
    "draw": ["picture", "star", "flower", "dog"],
    "sing": ["song", "birthday"],
    "build": ["tower", "block", "car"],
    "drink": ["juice", "milk"],
    "bring": ["book", "cup", "coat", "bag", "ball"],
    "show": ["picture", "book", "tower", "puzzle"],
    "give": ["cookie", "cup", "ball", "spoon"],
    "get": ["shoe", "coat", "cup", "book", "juice"],
    "wear": ["hat", "coat", "shoe", "sock"],
    "kick": ["ball", "door"],
}

MENTAL = ["see", "look", "want", "know", "like", "think",
          "remember", "guess", "hope", "wonder", "hear"]
# mental verbs that take a clausal complement
CLAUSAL = ["think", "know", "guess", "hope", "see", "remember", "wonder"]

INTRANSITIVE = ["come", "sit", "go", "jump", "run", "sleep", "cry", "laugh",
                "wait", "stop", "dance", "play", "look"]

PARTICIPLES = ["cooked", "built", "trapped", "washed", "broken", "finished",
               "done", "hidden", "painted", "closed"]

ADJS = ["big", "little", "red", "blue", "green", "happy", "sad", "funny",
        "nice", "good", "dirty", "clean", "hot", "cold", "new", "old",
        "soft", "wet", "pretty", "yummy", "tiny", "silly"]

ADVS = ["now", "here", "there", "again", "really", "very", "soon", "later",
        "gently", "quickly", "outside", "inside", "away", "together",
        "carefully", "nicely"]

SUBJ_PRON = ["you", "i", "we", "he", "she", "they"]
OBJ_PRON = ["me", "him", "her", "us", "them", "it"]
POSS_DET = ["your", "my", "his", "her", "our"]
ART_DET = ["the", "a", "this", "that"]
AUXES = ["can", "will", "don't", "should", "do", "did", "must", "won't"]
PROPNS = ["granny", "teddy", "spot", "rosie"]


def _zipf(n: int) -> np.ndarray:
    w = 1.0 / np.arange(1, n + 1)
    return w / w.sum()


@dataclass
class _Cat:
    forms: list[str]
    cum: np.ndarray

    @classmethod
    def build(cls, forms: Sequence[str]) -> "_Cat":
        return cls(forms=list(forms), cum=np.cumsum(_zipf(len(forms))))

    def draw(self, rng: np.random.Generator) -> str:
        i = int(np.searchsorted(self.cum, rng.random()))
        return self.forms[min(i, len(self.forms) - 1)]


class CorpusGenerator:
    """Template sampler; one call to :meth:`sentence` per utterance."""

    def __init__(self) -> None:
        self.nouns = _Cat.build(NOUNS)
        self.trans = _Cat.build(list(TRANSITIVE))
        self.mental = _Cat.build(MENTAL)
        self.clausal = _Cat.build(CLAUSAL)
        self.intrans = _Cat.build(INTRANSITIVE)
        self.parts = _Cat.build(PARTICIPLES)
        self.adjs = _Cat.build(ADJS)
        self.advs = _Cat.build(ADVS)
        self.subj = _Cat.build(SUBJ_PRON)
        self.obj = _Cat.build(OBJ_PRON)
        self.poss = _Cat.build(POSS_DET)
        self.art = _Cat.build(ART_DET)
        self.aux = _Cat.build(AUXES)
        self.propn = _Cat.build(PROPNS)
        self._templates = [
            (self._t_modal_transitive, 14),
            (self._t_modal_transitive_when, 10),
            (self._t_question_transitive, 10),
            (self._t_imperative, 8),
            (self._t_mental_clause, 12),
            (self._t_want, 8),
            (self._t_conditional, 8),
            (self._t_intransitive, 7),
            (self._t_look_at, 6),
            (self._t_copula, 6),
            (self._t_where, 4),
            (self._t_interjection, 3),
            (self._t_double_clause, 7),
            (self._t_give_me, 5),
        ]
        w = np.array([w for _, w in self._templates], dtype=np.float64)
        self._tcum = np.cumsum(w / w.sum())
        self._fav_cum = {v: np.cumsum(_zipf(len(objs)))
                         for v, objs in TRANSITIVE.items()}

    # -- slot helpers ---------------------------------------------------------

    def _object_np(self, rng, verb: Optional[str] = None, det: str = "any"):
        """Determiner (+ optional adjective) + noun, biased to the verb's
        favorite objects."""
        toks = []
        if det == "poss":
            toks.append((self.poss.draw(rng), "DET"))
        elif det == "art":
            toks.append((self.art.draw(rng), "DET"))
        else:
            cat = self.poss if rng.random() < 0.4 else self.art
            toks.append((cat.draw(rng), "DET"))
        if rng.random() < 0.25:
            toks.append((self.adjs.draw(rng), "ADJ"))
        if verb in TRANSITIVE and rng.random() < 0.7:
            fav = TRANSITIVE[verb]
            i = int(np.searchsorted(self._fav_cum[verb], rng.random()))
            noun = fav[min(i, len(fav) - 1)]
        else:
            noun = self.nouns.draw(rng)
        toks.append((noun, "NOUN"))
        return toks

    def _when_clause(self, rng):
        return [("when", "SCONJ"), ("it's", "PRON"),
                (self.parts.draw(rng), "VERB")]

    # -- templates ------------------------------------------------------------

    def _t_modal_transitive(self, rng):
        v = self.trans.draw(rng)
        toks = [(self.subj.draw(rng), "PRON"), (self.aux.draw(rng), "AUX"),
                (v, "VERB")]
        toks += self._object_np(rng, v)
        if rng.random() < 0.3:
            toks.append((self.advs.draw(rng), "ADV"))
        toks.append((".", "PUNCT"))
        return toks

    def _t_modal_transitive_when(self, rng):
        v = self.trans.draw(rng)
        toks = [(self.subj.draw(rng), "PRON"), (self.aux.draw(rng), "AUX"),
                (v, "VERB")]
        toks += self._object_np(rng, v)
        toks += self._when_clause(rng)
        toks.append((".", "PUNCT"))
        return toks

    def _t_question_transitive(self, rng):
        v = self.trans.draw(rng)
        toks = [(self.aux.draw(rng), "AUX"), (self.subj.draw(rng), "PRON"),
                (v, "VERB")]
        toks += self._object_np(rng, v)
        if rng.random() < 0.4:
            toks.append((self.advs.draw(rng), "ADV"))
        toks.append(("?", "PUNCT"))
        return toks

    def _t_imperative(self, rng):
        v = self.trans.draw(rng)
        toks = [(v, "VERB")]
        toks += self._object_np(rng, v)
        if rng.random() < 0.5:
            toks.append((self.advs.draw(rng), "ADV"))
        toks.append(("." if rng.random() < 0.8 else "!", "PUNCT"))
        return toks

    def _t_mental_clause(self, rng):
        v = self.clausal.draw(rng)
        ov = self.trans.draw(rng)
        toks = [(self.subj.draw(rng), "PRON"), (v, "VERB"),
                ("that", "SCONJ"), (self.subj.draw(rng), "PRON"),
                (self.aux.draw(rng), "AUX"), (ov, "VERB")]
        toks += self._object_np(rng, ov)
        if rng.random() < 0.5:
            toks += self._when_clause(rng)
        toks.append((".", "PUNCT"))
        return toks

    def _t_want(self, rng):
        v = self.trans.draw(rng)
        toks = [(self.subj.draw(rng), "PRON"),
                ("want" if rng.random() < 0.7 else "like", "VERB"),
                ("to", "PART"), (v, "VERB")]
        toks += self._object_np(rng, v)
        toks.append((".", "PUNCT"))
        return toks

    def _t_conditional(self, rng):
        v = self.trans.draw(rng)
        toks = [("if", "SCONJ"), (self.subj.draw(rng), "PRON"),
                ("don't", "AUX"), (v, "VERB")]
        toks += self._object_np(rng, v, det="art")
        toks += [(self.subj.draw(rng), "PRON"), ("will", "AUX"),
                 ("be", "AUX"), (self.adjs.draw(rng), "ADJ"), (".", "PUNCT")]
        return toks

    def _t_intransitive(self, rng):
        toks = [(self.subj.draw(rng), "PRON"), (self.aux.draw(rng), "AUX"),
                (self.intrans.draw(rng), "VERB"),
                (self.advs.draw(rng), "ADV")]
        if rng.random() < 0.4:
            toks += self._when_clause(rng)
        toks.append((".", "PUNCT"))
        return toks

    def _t_look_at(self, rng):
        v = ["look", "see", "hear"][int(rng.integers(3))]
        toks = [(v, "VERB"), ("at", "ADP")]
        toks += self._object_np(rng)
        toks.append(("!", "PUNCT"))
        return toks

    def _t_copula(self, rng):
        toks = [("the", "DET"), (self.nouns.draw(rng), "NOUN"),
                ("is", "AUX"), ("very", "ADV"), (self.adjs.draw(rng), "ADJ"),
                (".", "PUNCT")]
        return toks

    def _t_where(self, rng):
        toks = [("where", "ADV"), ("is", "AUX")]
        toks += self._object_np(rng, det="poss")
        toks.append(("?", "PUNCT"))
        return toks

    def _t_interjection(self, rng):
        first = ["oh", "wow", "okay", "yes", "no"]
        toks = [(first[int(rng.integers(len(first)))], "INTJ"),
                (self.subj.draw(rng), "PRON"), (self.aux.draw(rng), "AUX"),
                (self.mental.draw(rng), "VERB"), ("it", "PRON"),
                (".", "PUNCT")]
        return toks

    def _t_double_clause(self, rng):
        v = self.trans.draw(rng)
        toks = [(self.subj.draw(rng), "PRON"), (self.aux.draw(rng), "AUX"),
                (v, "VERB")]
        toks += self._object_np(rng, v)
        toks += [("because", "SCONJ"), (self.subj.draw(rng), "PRON"),
                 (self.aux.draw(rng), "AUX"),
                 (self.intrans.draw(rng), "VERB"),
                 (self.advs.draw(rng), "ADV"), (".", "PUNCT")]
        return toks

    def _t_give_me(self, rng):
        v = ["give", "show", "bring"][int(rng.integers(3))]
        toks = [(v, "VERB"), (self.obj.draw(rng), "PRON")]
        toks += self._object_np(rng, v)
        toks += [("and", "CCONJ"), (self.subj.draw(rng), "PRON"),
                 ("will", "AUX"), ("be", "AUX"), ("happy", "ADJ"),
                 (".", "PUNCT")]
        return toks

    # -- public API -----------------------------------------------------------

    def sentence(self, rng: np.random.Generator) -> list[tuple[str, str]]:
        ti = min(int(np.searchsorted(self._tcum, rng.random())),
                 len(self._templates) - 1)
        return self._templates[ti][0](rng)


def generate_split(n_sentences: int, seed: int, split: str = "train",
                   tagged: bool = True) -> CorpusSplit:
    gen = CorpusGenerator()
    rng = np.random.default_rng(
        np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, hash_split(split)]))
    sentences = []
    for i in range(n_sentences):
        pairs = gen.sentence(rng)
        tokens = [Token(form=f, upos=(u if tagged else None)) for f, u in pairs]
        sentences.append(AnnotatedSentence(id=f"{split}-{i + 1}", tokens=tokens))
    return CorpusSplit(name=split, sentences=sentences)


def hash_split(split: str) -> int:
    import zlib
    return zlib.crc32(split.encode("utf-8"))
