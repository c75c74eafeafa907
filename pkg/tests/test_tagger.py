import pytest

from perturbkit import tagger as T
from perturbkit.corpus import AnnotatedSentence, Token


def _sent(pairs, **kw):
    return AnnotatedSentence(
        id=kw.pop("id", "s"),
        tokens=[Token(form=f, upos=u) for f, u in pairs], **kw)


# --- training / accuracy -----------------------------------------------------

def test_heldout_accuracy_at_least_090(trained_tagger, heldout_gold):
    acc = T.evaluate_tagger(trained_tagger, heldout_gold)
    assert acc >= 0.90, f"held-out tagging accuracy {acc:.4f} < 0.90"


def test_training_is_deterministic(tmp_path, gold_corpus):
    sents = list(gold_corpus)[:300]
    m1 = T.train_tagger(sents, epochs=3, seed=4)
    m2 = T.train_tagger(sents, epochs=3, seed=4)
    p1, p2 = tmp_path / "a.txt", tmp_path / "b.txt"
    m1.save(p1)
    m2.save(p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_model_roundtrip_predicts_identically(tmp_path, trained_tagger,
                                              heldout_gold):
    p = tmp_path / "m.txt"
    trained_tagger.save(p)
    loaded = T.TaggerModel.load(p)
    for sent in heldout_gold[:50]:
        assert T.tag(loaded, sent.forms) == T.tag(trained_tagger, sent.forms)


def test_zero_epochs_predicts_majority_tag(gold_corpus):
    sents = list(gold_corpus)[:100]
    model = T.train_tagger(sents, epochs=0, seed=0)
    from collections import Counter
    majority = Counter(t.upos for s in sents for t in s.tokens).most_common(1)[0][0]
    assert model.majority_tag == majority
    assert T.tag(model, ["you", "can", "eat"]) == [majority] * 3


def test_training_requires_gold_tags():
    bare = AnnotatedSentence(id="s", tokens=[Token("hi")])
    with pytest.raises(T.TaggerError, match="upos"):
        T.train_tagger([bare], epochs=1)


def test_tag_rejects_empty_sentence(trained_tagger):
    with pytest.raises(T.TaggerError):
        T.tag(trained_tagger, [])


def test_example_sentence_tags(trained_tagger):
    got = T.tag(trained_tagger, ["you", "can", "eat", "your", "supper", "."])
    assert got == ["PRON", "AUX", "VERB", "DET", "NOUN", "PUNCT"]


# --- base-NP chunking --------------------------------------------------------

def test_chunk_pronoun_and_possessive_np():
    s = _sent([("you", "PRON"), ("can", "AUX"), ("eat", "VERB"),
               ("your", "DET"), ("supper", "NOUN"), (".", "PUNCT")])
    assert T.chunk_nps(s) == ((0, 1), (3, 5))


def test_chunk_det_num_adj_noun_run():
    s = _sent([("the", "DET"), ("two", "NUM"), ("big", "ADJ"),
               ("red", "ADJ"), ("dogs", "NOUN")])
    assert T.chunk_nps(s) == ((0, 5),)


def test_chunk_proper_noun_run_and_bare_noun():
    s = _sent([("mary", "PROPN"), ("jane", "PROPN"), ("likes", "VERB"),
               ("milk", "NOUN")])
    assert T.chunk_nps(s) == ((0, 2), (3, 4))


def test_chunk_longest_match_is_greedy_left_to_right():
    # DET ADJ NOUN NOUN is one span, not two
    s = _sent([("the", "DET"), ("big", "ADJ"), ("birthday", "NOUN"),
               ("cake", "NOUN")])
    assert T.chunk_nps(s) == ((0, 4),)


def test_chunk_skips_non_np_material():
    s = _sent([("eat", "VERB"), ("quickly", "ADV"), ("!", "PUNCT")])
    assert T.chunk_nps(s) == ()


def test_chunk_det_alone_is_not_np():
    s = _sent([("the", "DET"), ("quickly", "ADV")])
    assert T.chunk_nps(s) == ()


# --- main verb ---------------------------------------------------------------

def test_main_verb_simple_question():
    s = _sent([("can", "AUX"), ("you", "PRON"), ("tell", "VERB"),
               ("me", "PRON"), ("more", "ADJ"), ("?", "PUNCT")])
    assert T.find_main_verb(s) == 2


def test_main_verb_prefers_matrix_clause():
    s = _sent([("i", "PRON"), ("know", "VERB"), ("you", "PRON"),
               ("want", "VERB"), ("it", "PRON")])
    assert T.find_main_verb(s) == 1


def test_main_verb_skips_subordinate_clause():
    s = _sent([("because", "SCONJ"), ("he", "PRON"), ("ran", "VERB"),
               ("we", "PRON"), ("can", "AUX"), ("play", "VERB")])
    assert T.find_main_verb(s) == 5


def test_main_verb_all_subordinate_falls_back_to_leftmost():
    s = _sent([("when", "SCONJ"), ("it's", "PRON"), ("raining", "VERB")])
    assert T.find_main_verb(s) == 2


def test_main_verb_none_when_verbless():
    s = _sent([("the", "DET"), ("dog", "NOUN"), ("!", "PUNCT")])
    assert T.find_main_verb(s) is None


def test_main_verb_uses_dependency_root_when_heads_present():
    toks = [Token("i", upos="PRON", head=2),
            Token("think", upos="VERB", head=4),     # not the root
            Token("you", upos="PRON", head=4),
            Token("run", upos="VERB", head=0)]       # root
    s = AnnotatedSentence(id="s", tokens=toks)
    assert T.find_main_verb(s) == 3


# --- annotation --------------------------------------------------------------

def test_annotate_fills_all_layers(trained_tagger):
    bare = AnnotatedSentence(
        id="s", tokens=[Token(f) for f in
                        ["you", "can", "eat", "your", "supper", "."]])
    out = T.annotate(bare, trained_tagger)
    assert [t.upos for t in out.tokens] == \
        ["PRON", "AUX", "VERB", "DET", "NOUN", "PUNCT"]
    assert out.np_spans == ((0, 1), (3, 5))
    assert out.main_verb == 2


def test_resolve_annotations_keeps_gold_tags(gold_corpus):
    resolved = T.resolve_annotations(
        type(gold_corpus)(name="g", sentences=list(gold_corpus)[:20]))
    for before, after in zip(list(gold_corpus)[:20], resolved):
        assert [t.upos for t in before.tokens] == [t.upos for t in after.tokens]
        if after.main_verb is not None:
            assert after.tokens[after.main_verb].upos == "VERB"
