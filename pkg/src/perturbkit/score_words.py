"""Mental vs. physical verb classification with a small inflection table."""

from __future__ import annotations

PHYSICAL_VERBS = frozenset({
    "take", "say", "come", "play", "push", "sit", "pull", "eat", "make",
    "call", "catch", "put", "find",
})

MENTAL_VERBS = frozenset({
    "see", "look", "want", "know", "like", "think",
})

# inflected surface form -> lemma, for the two lists above only
INFLECTION_EXCEPTIONS = {
    "takes": "take", "took": "take", "taken": "take", "taking": "take",
    "says": "say", "said": "say", "saying": "say",
    "comes": "come", "came": "come", "coming": "come",
    "plays": "play", "played": "play", "playing": "play",
    "pushes": "push", "pushed": "push", "pushing": "push",
    "sits": "sit", "sat": "sit", "sitting": "sit",
    "pulls": "pull", "pulled": "pull", "pulling": "pull",
    "eats": "eat", "ate": "eat", "eaten": "eat", "eating": "eat",
    "makes": "make", "made": "make", "making": "make",
    "calls": "call", "called": "call", "calling": "call",
    "catches": "catch", "caught": "catch", "catching": "catch",
    "puts": "put", "putting": "put",
    "finds": "find", "found": "find", "finding": "find",
    "sees": "see", "saw": "see", "seen": "see", "seeing": "see",
    "looks": "look", "looked": "look", "looking": "look",
    "wants": "want", "wanted": "want", "wanting": "want",
    "knows": "know", "knew": "know", "known": "know", "knowing": "know",
    "likes": "like", "liked": "like", "liking": "like",
    "thinks": "think", "thought": "think", "thinking": "think",
}


def classify_word(form: str, target_pos: str = "VERB") -> str:
    """mental | physical | other; non-verbs are always ``other``."""
    if target_pos != "VERB":
        return "other"
    lemma = INFLECTION_EXCEPTIONS.get(form.lower(), form.lower())
    if lemma in MENTAL_VERBS:
        return "mental"
    if lemma in PHYSICAL_VERBS:
        return "physical"
    return "other"
