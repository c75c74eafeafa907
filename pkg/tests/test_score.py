import math

import numpy as np
import pytest

from perturbkit import score as S
from perturbkit.evalgen import MaskedItem, MinimalPairItem
from perturbkit.score_words import MENTAL_VERBS, PHYSICAL_VERBS, classify_word


def _masked_item(i, answer="see", word_class="mental"):
    return MaskedItem(id=f"m-{i}", source_sentence_id=f"s-{i}",
                      tokens=[answer], mask_index=0, answer=answer,
                      target_pos="VERB", word_class=word_class)


def _pair_item(i, answer="see", alts=("take", "know")):
    return MinimalPairItem(id=f"p-{i}", source_sentence_id=f"s-{i}",
                          tokens=[answer], target_index=0, answer=answer,
                          alternatives=list(alts), target_pos="VERB",
                          word_class=classify_word(answer), bin=1)


# --- word classes ------------------------------------------------------------

def test_classify_word_core_lists():
    assert classify_word("see") == "mental"
    assert classify_word("know") == "mental"
    assert classify_word("eat") == "physical"
    assert classify_word("take") == "physical"
    assert classify_word("run") == "other"


def test_classify_word_inflections():
    assert classify_word("sees") == "mental"
    assert classify_word("knew") == "mental"
    assert classify_word("ate") == "physical"
    assert classify_word("putting") == "physical"


def test_classify_word_non_verbs_are_other():
    assert classify_word("see", target_pos="NOUN") == "other"
    assert classify_word("dog") == "other"


def test_verb_lists_are_disjoint():
    assert not MENTAL_VERBS & PHYSICAL_VERBS


# --- trial scoring -----------------------------------------------------------

def test_score_masked_exact_match():
    items = [_masked_item(0, "see"), _masked_item(1, "know")]
    resp = [S.ResponseRecord(id="m-0", prediction="see"),
            S.ResponseRecord(id="m-1", prediction="eat")]
    rows = S.score_masked(items, resp, "original", model_label="lm")
    assert [r.correct for r in rows] == [1, 0]
    assert all(r.task == "masked" for r in rows)
    assert rows[0].correct_answer_id == "s-0"
    assert rows[0].model_label == "lm"


def test_score_masked_is_case_insensitive():
    rows = S.score_masked([_masked_item(0, "see")],
                          [S.ResponseRecord(id="m-0", prediction="SEE")],
                          "original")
    assert rows[0].correct == 1


def test_score_pairs_strictly_greater_and_ties_flagged():
    item = _pair_item(0)
    resp = [S.ResponseRecord(id="p-0", logprob_original=-5.0,
                             logprob_alternatives=[-6.0, -5.0])]
    rows = S.score_pairs([item], resp, "original")
    assert [r.correct for r in rows] == [1, 0]   # tie counts as incorrect
    assert [r.tie for r in rows] == [False, True]
    assert all(r.task == "minimal_pair" for r in rows)


def test_score_pairs_alternative_count_mismatch():
    resp = [S.ResponseRecord(id="p-0", logprob_original=-5.0,
                             logprob_alternatives=[-6.0])]
    with pytest.raises(S.ScoreError, match="expected 2"):
        S.score_pairs([_pair_item(0)], resp, "original")


def test_join_rejects_missing_stray_duplicate():
    items = [_masked_item(0)]
    with pytest.raises(S.ScoreError, match="without responses"):
        S.score_masked(items, [], "original")
    with pytest.raises(S.ScoreError, match="not in eval set"):
        S.score_masked(items, [S.ResponseRecord(id="m-0", prediction="x"),
                               S.ResponseRecord(id="zzz", prediction="x")],
                       "original")
    with pytest.raises(S.ScoreError, match="duplicate"):
        S.score_masked(items, [S.ResponseRecord(id="m-0", prediction="x"),
                               S.ResponseRecord(id="m-0", prediction="y")],
                       "original")


def test_skipped_responses_are_dropped():
    rows = S.score_masked([_masked_item(0)],
                          [S.ResponseRecord(id="m-0", skip="oov")], "original")
    assert rows == []


def test_trial_rows_roundtrip(tmp_path):
    rows = [S.TrialRow(correct=1, perturb_type="original", target_pos="VERB",
                       word_class="mental", correct_answer_id="s-1",
                       task="minimal_pair", model_label="lm", subtype="",
                       tie=False),
            S.TrialRow(correct=0, perturb_type="shuffle_1gram",
                       target_pos="NOUN", word_class="other",
                       correct_answer_id="s-2", task="masked",
                       model_label="lm", subtype="1gram", tie=True)]
    p = tmp_path / "rows.csv"
    S.write_trial_rows(rows, p)
    assert S.read_trial_rows(p) == rows


# --- design matrix -----------------------------------------------------------

def _rows(spec):
    """spec: list of (perturb, word_class, n, n_correct)."""
    rows = []
    for perturb, wc, n, k in spec:
        for i in range(n):
            rows.append(S.TrialRow(
                correct=int(i < k), perturb_type=perturb, target_pos="VERB",
                word_class=wc, correct_answer_id=f"c-{perturb}-{wc}-{i % 25}",
                task="minimal_pair"))
    return rows


def test_build_design_reference_levels_and_terms():
    rows = _rows([("original", "mental", 4, 2),
                  ("shuffle_1gram", "physical", 4, 2)])
    X, y, terms = S.build_design(rows)
    assert terms == ["intercept", "perturb[shuffle_1gram]",
                     "class[physical]",
                     "perturb[shuffle_1gram]:class[physical]"]
    assert X.shape == (8, 4)
    orig_rows = X[:4]
    assert np.array_equal(orig_rows[:, 1:], np.zeros((4, 3)))
    shuf_rows = X[4:]
    assert np.array_equal(shuf_rows, np.tile([1, 1, 1, 1], (4, 1)))


def test_build_design_requires_two_perturb_levels():
    with pytest.raises(S.ScoreError, match="two levels"):
        S.build_design(_rows([("original", "mental", 4, 2)]))


def test_build_design_empty_errors():
    with pytest.raises(S.ScoreError):
        S.build_design([])


# --- IRLS --------------------------------------------------------------------

def test_irls_matches_closed_form_two_groups():
    # [DERIVED] intercept-plus-indicator logistic MLE has the closed form
    # beta0 = logit(p1), beta1 = logit(p2) - logit(p1); with 75/100 vs 50/100
    # that is ln 3 and -ln 3
    rows = _rows([("original", "mental", 100, 75),
                  ("shuffle_1gram", "mental", 100, 50)])
    fit = S.fit_logistic(rows, interaction=True)
    assert fit.terms == ["intercept", "perturb[shuffle_1gram]"]
    assert fit.converged and not fit.separated
    assert abs(fit.estimates[0] - math.log(3)) < 1e-8
    assert abs(fit.estimates[1] + math.log(3)) < 1e-8


def test_irls_full_interaction_matches_cell_logits():
    # [DERIVED] saturated 2x2 design: fitted cell probabilities must equal
    # the observed cell proportions exactly
    spec = [("original", "mental", 100, 90), ("original", "physical", 100, 70),
            ("shuffle_1gram", "mental", 100, 80),
            ("shuffle_1gram", "physical", 100, 40)]
    fit = S.fit_logistic(_rows(spec), interaction=True)
    logit = lambda p: math.log(p / (1 - p))
    b = fit.estimates
    assert abs(b[0] - logit(0.9)) < 1e-8
    assert abs(b[0] + b[1] - logit(0.8)) < 1e-8
    assert abs(b[0] + b[2] - logit(0.7)) < 1e-8
    assert abs(b[0] + b[1] + b[2] + b[3] - logit(0.4)) < 1e-8


def test_irls_flags_separation():
    rows = _rows([("original", "mental", 50, 50),
                  ("shuffle_1gram", "mental", 50, 0)])
    fit = S.fit_logistic(rows)
    assert fit.separated


def test_irls_standard_errors_match_analytic():
    # [DERIVED] for a single-cell intercept model, se = 1/sqrt(n p (1-p))
    rows = _rows([("original", "mental", 100, 75),
                  ("shuffle_1gram", "mental", 100, 50)])
    fit = S.fit_logistic(rows)
    se0_expected = math.sqrt(1 / (100 * 0.75 * 0.25))
    assert abs(fit.se[0] - se0_expected) < 1e-6


# --- cluster bootstrap -------------------------------------------------------

def _boot_rows():
    rng = np.random.default_rng(0)
    rows = []
    for perturb, p in [("original", 0.8), ("shuffle_1gram", 0.6)]:
        for i in range(300):
            rows.append(S.TrialRow(
                correct=int(rng.random() < p), perturb_type=perturb,
                target_pos="VERB", word_class="mental",
                correct_answer_id=f"c-{i % 40}", task="minimal_pair"))
    return rows


def test_bootstrap_is_bit_deterministic():
    rows = _boot_rows()
    f1 = S.cluster_bootstrap(rows, B=150, seed=3)
    f2 = S.cluster_bootstrap(rows, B=150, seed=3)
    assert np.array_equal(f1.estimates, f2.estimates)
    assert np.array_equal(f1.ci_low, f2.ci_low)
    assert np.array_equal(f1.ci_high, f2.ci_high)
    assert np.array_equal(f1.p_boot, f2.p_boot)


def test_bootstrap_seed_changes_intervals():
    rows = _boot_rows()
    f1 = S.cluster_bootstrap(rows, B=150, seed=3)
    f2 = S.cluster_bootstrap(rows, B=150, seed=4)
    assert not np.array_equal(f1.ci_low, f2.ci_low)


def test_bootstrap_rejects_small_b_and_single_cluster():
    rows = _boot_rows()
    with pytest.raises(S.ScoreError, match="too few"):
        S.cluster_bootstrap(rows, B=99)
    one_cluster = [S.TrialRow(correct=i % 2, perturb_type=p,
                              target_pos="VERB", word_class="mental",
                              correct_answer_id="only", task="minimal_pair")
                   for i in range(20) for p in ("original", "shuffle_1gram")]
    with pytest.raises(S.ScoreError, match="two clusters"):
        S.cluster_bootstrap(one_cluster, B=150)


def test_bootstrap_outputs_are_well_formed():
    fit = S.cluster_bootstrap(_boot_rows(), B=150, seed=1)
    assert np.all(fit.p_boot > 0) and np.all(fit.p_boot <= 1)
    assert np.all(fit.ci_low <= fit.ci_high)
    assert fit.note == S.MIXED_MODEL_NOTE


# --- reporting ---------------------------------------------------------------

def _ordering_rows():
    rows = []
    acc = {("original", "VERB"): 0.9, ("replace_word_verb", "VERB"): 0.7,
           ("shuffle_1gram", "VERB"): 0.6, ("original", "NOUN"): 0.8,
           ("shuffle_1gram", "NOUN"): 0.6, ("replace_word_noun", "NOUN"): 0.5}
    for (perturb, pos), p in acc.items():
        n = 100
        k = round(p * n)
        for i in range(n):
            rows.append(S.TrialRow(
                correct=int(i < k), perturb_type=perturb, target_pos=pos,
                word_class="other", correct_answer_id=f"{pos}-{i}",
                task="minimal_pair"))
    return rows


def test_build_report_accuracies_and_orderings():
    report = S.build_report(_ordering_rows(), chance={"minimal_pair": 0.5})
    assert report.accuracy("original", "VERB", "minimal_pair") == 0.9
    assert report.accuracy("shuffle_1gram", "NOUN", "minimal_pair") == 0.6
    assert report.orderings == {
        "verbs_minimal_pair_original>replace>shuffle": True,
        "nouns_minimal_pair_original>shuffle>replace": True,
    }


def test_build_report_flags_violated_ordering():
    rows = _ordering_rows()
    for r in rows:
        if r.perturb_type == "original" and r.target_pos == "VERB":
            r.correct = 0
    report = S.build_report(rows)
    assert report.orderings["verbs_minimal_pair_original>replace>shuffle"] is False


def test_report_csv_layout(tmp_path):
    report = S.build_report(_ordering_rows(), chance={"minimal_pair": 0.5})
    p = tmp_path / "report.csv"
    report.write_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == ("condition,subtype,task,target_pos,word_class,"
                        "n,accuracy,chance,ties")
    assert any(line.startswith("ordering,") for line in lines)
    md = report.to_markdown()
    assert "Analysis note" in md


def test_fits_csv_layout(tmp_path):
    fit = S.cluster_bootstrap(_boot_rows(), B=150, seed=1)
    report = S.ScoreReport(fits={"demo": fit})
    p = tmp_path / "fits.csv"
    report.write_fits_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "fit,term,estimate,se,p_boot,ci_low,ci_high,separated"
    assert len(lines) == 1 + len(fit.terms)


# --- response record files ---------------------------------------------------

def test_response_records_roundtrip(tmp_path):
    recs = [S.ResponseRecord(id="a", prediction="dog"),
            S.ResponseRecord(id="b", logprob_original=-1.5,
                             logprob_alternatives=[-2.0, -3.0]),
            S.ResponseRecord(id="c", skip="oov")]
    p = tmp_path / "resp.jsonl"
    S.write_response_records(recs, p)
    assert p.read_text().startswith("# perturbkit response records v1\n")
    back = S.read_response_records(p)
    assert back == recs


def test_response_records_require_id(tmp_path):
    p = tmp_path / "resp.jsonl"
    p.write_text('{"prediction": "dog"}\n')
    with pytest.raises(S.ScoreError, match="missing id"):
        S.read_response_records(p)
