"""Acceptance criteria.

The PRIMARY criteria run against one full-scale pipeline run (100k train /
20k test sentences, seed 7) produced once per session; each test prints one
``[ACCEPTANCE] <criterion>: PASS|FAIL`` line.  The SECONDARY criteria drive
the Node.js adapter in ``frontend/`` through the same file protocol.
"""

import csv
import json
import math
import os
import shutil
import subprocess
import time
from collections import Counter

import numpy as np
import pytest

from perturbkit import corpus as corpus_mod
from perturbkit import evalgen, lexicon, manifest as manifest_mod, ngram
from perturbkit import perturb as perturb_mod
from perturbkit import score as score_mod
from perturbkit import tagger as tagger_mod
from perturbkit.manifest import CONFIG_DEFAULTS
from perturbkit.pipeline import run_pipeline

FULL_SCALE = dict(CONFIG_DEFAULTS, seed=7, train_sentences=100_000,
                  test_sentences=20_000, bootstrap_b=300)

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
FRONTEND = os.path.join(REPO_ROOT, "frontend")


def check(name: str, ok: bool, detail: str = "") -> None:
    line = f"[ACCEPTANCE] {name}: {'PASS' if ok else 'FAIL'} {detail}".rstrip()
    print(line)
    import conftest
    conftest.ACCEPTANCE_LINES.append(line)
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="session")
def full_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("fullrun")
    t0 = time.time()
    result = run_pipeline(out, FULL_SCALE)
    return result, time.time() - t0


@pytest.fixture(scope="session")
def train_annotated(full_run):
    result, _ = full_run
    split = corpus_mod.read_conllu_file(
        os.path.join(result.run_dir, "corpus", "train.tagged.conllu"),
        split="train")
    return tagger_mod.resolve_annotations(split)


def _report_rows(result):
    with open(result.report_csv) as fh:
        return list(csv.DictReader(fh))


def _acc(rows, condition, task, pos):
    for r in rows:
        if (r["condition"] == condition and r["task"] == task
                and r["target_pos"] == pos and r["word_class"] == "all"):
            return float(r["accuracy"])
    return None


# --- criterion 1: perturbation invariants at scale ---------------------------

def test_primary_perturbation_invariants_100k_under_2min(train_annotated):
    table = lexicon.build_frequency_table(train_annotated)
    content = {"NOUN", "ADJ", "ADV", "VERB"}
    t0 = time.time()
    problems = 0
    for kind in ("replace_word_verb", "replace_word_noun",
                 "shuffle_1gram", "shuffle_np"):
        spec = perturb_mod.PerturbationSpec(kind=kind, seed=7)
        out = perturb_mod.perturb_corpus(train_annotated, spec, table)
        for before, after in zip(train_annotated, out):
            if kind.startswith("shuffle"):
                if Counter(after.forms) != Counter(before.forms):
                    problems += 1
                if (before.tokens and before.tokens[-1].upos == "PUNCT"
                        and after.tokens[-1].form != before.tokens[-1].form):
                    problems += 1
                if kind == "shuffle_np":
                    want = sorted(tuple(before.forms[s:e])
                                  for s, e in before.np_spans)
                    got = sorted(tuple(after.forms[s:e])
                                 for s, e in after.np_spans)
                    if want != got:
                        problems += 1
            else:
                if len(after.tokens) != len(before.tokens):
                    problems += 1
                for tb, ta in zip(before.tokens, after.tokens):
                    if ta.upos != tb.upos:
                        problems += 1
                    if tb.upos not in content and ta.form != tb.form:
                        problems += 1
                if (kind == "replace_word_verb"
                        and before.main_verb is not None
                        and after.tokens[before.main_verb].form
                        != before.tokens[before.main_verb].form):
                    problems += 1
    elapsed = time.time() - t0
    check("perturbation_invariants_100k",
          problems == 0 and elapsed < 120.0,
          f"violations={problems} elapsed={elapsed:.1f}s (limit 120s)")


# --- criterion 2: replacement sampling distribution --------------------------

def test_primary_noun_replacement_distribution(train_annotated):
    table = lexicon.build_frequency_table(train_annotated)
    cls = table.counts["NOUN"]
    exclude = max(cls, key=cls.get)
    pool = {f: c for f, c in cls.items() if f != exclude}
    total = sum(pool.values())
    rng = np.random.default_rng(7)
    n = 40_000
    draws = Counter(
        lexicon.sample_same_pos(table, "NOUN", exclude, rng)[0]
        for _ in range(n))
    tv = 0.5 * sum(abs(draws.get(f, 0) / n - c / total)
                   for f, c in pool.items())
    check("noun_replacement_distribution", n >= 10_000 and tv < 0.02,
          f"n={n} total_variation={tv:.4f} (limit 0.02)")


# --- criterion 3: log-rank binning vs brute force ----------------------------

def test_primary_binning_matches_bruteforce_oracle():
    rng = np.random.default_rng(2024)
    bad = 0
    for _ in range(100):
        k = int(rng.integers(2, 7))
        n = int(rng.integers(k, 80))
        freqs = {f"w{i}": int(rng.integers(1, 1000)) for i in range(n)}
        table = lexicon.FrequencyTable()
        for f, c in freqs.items():
            table.add("NOUN", f, c)
        bins = lexicon.bin_by_log_rank(table, "NOUN", k=k)
        ranked = sorted(freqs, key=lambda f: (-freqs[f], f))
        width = math.log(n) / k
        for r, form in enumerate(ranked, start=1):
            expect = 0 if width == 0 else min(k - 1,
                                              int(math.log(r) / width))
            if bins.bin_of("NOUN", form) != expect:
                bad += 1
    check("binning_bruteforce_oracle", bad == 0, f"mismatches={bad}")


# --- criterion 4: eval-set contract ------------------------------------------

def test_primary_eval_set_contract(full_run):
    result, _ = full_run
    test_split = tagger_mod.resolve_annotations(corpus_mod.read_conllu_file(
        os.path.join(result.run_dir, "corpus", "test.tagged.conllu"),
        split="test"))
    table = lexicon.build_frequency_table(test_split)
    problems = []
    for pos in ("VERB", "NOUN"):
        bins = lexicon.bin_by_log_rank(table, pos, k=4)
        path = result.eval_paths[f"pairs_{pos.lower()}"]
        items = evalgen.read_eval_records(path)
        if not items:
            problems.append(f"{pos}: empty eval set")
        for item in items:
            if len(item.tokens) <= 10:
                problems.append(f"{item.id}: length {len(item.tokens)}")
            if len(item.alternatives) != 5:
                problems.append(f"{item.id}: {len(item.alternatives)} alts")
            for alt in item.alternatives:
                if bins.bin_of(pos, alt) != item.bin:
                    problems.append(f"{item.id}: {alt} crosses bins")
        # the eval file regenerated from the same test text is byte-identical,
        # so every model condition consumes the same items
        regen = evalgen.build_minimal_pairs(test_split, pos, bins, n_alt=5,
                                            min_len=10, seed=FULL_SCALE["seed"])
        tmp = path + ".regen"
        evalgen.write_eval_records(regen, tmp)
        same = manifest_mod.sha256_file(tmp) == manifest_mod.sha256_file(path)
        os.unlink(tmp)
        if not same:
            problems.append(f"{pos}: regeneration changed bytes")
    check("eval_set_contract", not problems, "; ".join(problems[:5]))


# --- criterion 5: regression machinery ---------------------------------------

def _two_group_rows(p1_num, p2_num, n=100):
    rows = []
    for perturb, k in (("original", p1_num), ("shuffle_1gram", p2_num)):
        for i in range(n):
            rows.append(score_mod.TrialRow(
                correct=int(i < k), perturb_type=perturb, target_pos="VERB",
                word_class="mental", correct_answer_id=f"c-{i % 25}",
                task="minimal_pair"))
    return rows


def test_primary_irls_closed_form_and_bootstrap_determinism():
    fit = score_mod.fit_logistic(_two_group_rows(75, 50))
    err = max(abs(fit.estimates[0] - math.log(3)),
              abs(fit.estimates[1] + math.log(3)))
    b1 = score_mod.cluster_bootstrap(_two_group_rows(75, 50), B=200, seed=5)
    b2 = score_mod.cluster_bootstrap(_two_group_rows(75, 50), B=200, seed=5)
    identical = (np.array_equal(b1.ci_low, b2.ci_low)
                 and np.array_equal(b1.ci_high, b2.ci_high)
                 and np.array_equal(b1.p_boot, b2.p_boot))
    check("irls_closed_form_and_bootstrap_determinism",
          err < 1e-8 and identical,
          f"max_coef_error={err:.2e} bootstrap_identical={identical}")


def test_primary_null_calibration():
    # clustered data with no real condition effect: the bootstrap p-value
    # for the condition term should reject at ~nominal 5%
    rng = np.random.default_rng(99)
    n_sims, B, alpha = 200, 199, 0.05
    rejections = 0
    for sim in range(n_sims):
        rows = []
        for c in range(40):
            u = rng.normal(0.0, 0.7)
            p = 1.0 / (1.0 + math.exp(-(0.5 + u)))
            for perturb in ("original", "shuffle_1gram"):
                for _ in range(10):
                    rows.append(score_mod.TrialRow(
                        correct=int(rng.random() < p), perturb_type=perturb,
                        target_pos="VERB", word_class="mental",
                        correct_answer_id=f"c-{c}", task="minimal_pair"))
        fit = score_mod.cluster_bootstrap(rows, B=B, seed=1000 + sim)
        if fit.p_boot[1] < alpha:
            rejections += 1
    rate = rejections / n_sims
    check("null_calibration", 0.02 <= rate <= 0.09,
          f"rejection_rate={rate:.3f} over {n_sims} sims (accept [0.02, 0.09])")


# --- criterion 6: end-to-end directional effects -----------------------------

def test_primary_directional_effects(full_run):
    result, elapsed = full_run
    rows = _report_rows(result)
    v_orig = _acc(rows, "original", "minimal_pair", "VERB")
    v_shuf = _acc(rows, "shuffle_1gram", "minimal_pair", "VERB")
    v_rep = _acc(rows, "replace_word_verb", "minimal_pair", "VERB")
    n_orig = _acc(rows, "original", "minimal_pair", "NOUN")
    n_shuf = _acc(rows, "shuffle_1gram", "minimal_pair", "NOUN")
    n_rep = _acc(rows, "replace_word_noun", "minimal_pair", "NOUN")
    ok = (None not in (v_orig, v_shuf, v_rep, n_orig, n_shuf, n_rep)
          and v_orig >= v_shuf + 0.05
          and v_orig > v_rep and v_orig > v_shuf
          and n_orig > n_shuf and n_orig > n_rep
          and elapsed < 1800.0)
    check("directional_effects",
          ok,
          f"verb orig={v_orig} shuffle={v_shuf} replace={v_rep}; "
          f"noun orig={n_orig} shuffle={n_shuf} replace={n_rep}; "
          f"pipeline={elapsed:.0f}s (limit 1800s)")


# --- criterion 7: masked scoring equivalence ---------------------------------

def test_primary_masked_argmax_equals_full_rescoring(full_run):
    result, _ = full_run
    model = ngram.NGramModel.load(result.model_paths["original"])
    items = evalgen.read_eval_records(result.eval_paths["masked_verb"])[:1000]
    with open(os.path.join(result.run_dir, "eval",
                           "candidates_verb.txt")) as fh:
        cands = sorted(line.strip() for line in fh if line.strip())
    mismatches = 0
    for item in items:
        fast = model.masked_argmax(item.tokens, item.mask_index, cands)
        best, best_lp = None, -math.inf
        for cand in cands:
            alt = list(item.tokens)
            alt[item.mask_index] = cand
            lp = model.sentence_logprob(alt)
            if lp > best_lp:
                best, best_lp = cand, lp
        mismatches += fast != best
    rows = _report_rows(result)
    m_orig = _acc(rows, "original", "masked", "VERB")
    m_shuf = _acc(rows, "shuffle_1gram", "masked", "VERB")
    check("masked_argmax_equivalence",
          mismatches == 0 and len(items) == 1000 and m_orig > m_shuf,
          f"mismatches={mismatches}/{len(items)} "
          f"masked_verb orig={m_orig} shuffle={m_shuf}")


# --- criterion 8: determinism ------------------------------------------------

def test_primary_full_run_manifest_verifies(full_run):
    result, _ = full_run
    problems = manifest_mod.verify(result.manifest_path)
    check("manifest_verifies", problems == [], "; ".join(problems[:5]))


def test_primary_reruns_are_byte_identical(tmp_path):
    cfg = dict(CONFIG_DEFAULTS, seed=11, train_sentences=3000,
               test_sentences=800, bootstrap_b=150)
    r1 = run_pipeline(tmp_path / "run1", cfg)
    r2 = run_pipeline(tmp_path / "run2", cfg)
    diffs = []
    m1 = manifest_mod.RunManifest.read(r1.manifest_path)
    m2 = manifest_mod.RunManifest.read(r2.manifest_path)
    h1 = {f["path"]: f["sha256"] for f in m1.files}
    h2 = {f["path"]: f["sha256"] for f in m2.files}
    if set(h1) != set(h2):
        diffs.append("file lists differ")
    diffs += [p for p in h1 if h1[p] != h2.get(p)]
    check("rerun_byte_identical", not diffs,
          f"{len(diffs)} differing artifacts: {diffs[:5]}")


# --- secondary: Node.js adapter ----------------------------------------------

NODE = shutil.which("node")


def _adapter(args, cwd=FRONTEND):
    return subprocess.run(
        [NODE, os.path.join(FRONTEND, "dist", "cli.js"), *args],
        capture_output=True, text=True, cwd=cwd)


@pytest.fixture(scope="session")
def adapter_built():
    assert NODE, "node is required for the adapter acceptance tests"
    dist = os.path.join(FRONTEND, "dist", "cli.js")
    assert os.path.exists(dist), (
        "frontend not built; run `npm install && npm run build` in frontend/")
    return dist


@pytest.fixture(scope="session")
def small_eval(tmp_path_factory):
    """A compact eval file pair built by the primary toolkit."""
    from perturbkit import datagen
    d = tmp_path_factory.mktemp("adapter")
    gold = datagen.generate_split(600, seed=13, split="gold")
    sents = list(gold)
    model = tagger_mod.train_tagger(sents[100:], epochs=4, seed=13)
    test = tagger_mod.annotate_split(
        datagen.generate_split(400, seed=13, split="test", tagged=False), model)
    table = lexicon.build_frequency_table(test)
    vocab = evalgen.VocabPredicate(frozenset(
        f for f, c in table.counts["VERB"].items() if c >= 2))
    masked = evalgen.build_masked_set(test, "VERB", vocab, seed=13)[:40]
    bins = lexicon.bin_by_log_rank(table, "VERB", k=4)
    pairs = evalgen.build_minimal_pairs(test, "VERB", bins, n_alt=3,
                                        seed=13)[:40]
    masked_path = str(d / "masked.jsonl")
    pairs_path = str(d / "pairs.jsonl")
    evalgen.write_eval_records(masked, masked_path)
    evalgen.write_eval_records(pairs, pairs_path)
    return d, masked_path, pairs_path, masked, pairs


def test_secondary_adapter_schema_conformance(adapter_built, small_eval):
    d, masked_path, pairs_path, masked, pairs = small_eval
    out_m = str(d / "resp_masked.jsonl")
    out_p = str(d / "resp_pairs.jsonl")
    r1 = _adapter(["respond", "--eval", masked_path, "--model", "frequency",
                   "--out", out_m])
    r2 = _adapter(["respond", "--eval", pairs_path, "--model", "frequency",
                   "--out", out_p])
    ok = r1.returncode == 0 and r2.returncode == 0
    detail = (r1.stderr + r2.stderr).strip()
    if ok:
        # the primary scorer must accept the adapter's records end to end
        resp_m = score_mod.read_response_records(out_m)
        resp_p = score_mod.read_response_records(out_p)
        rows = score_mod.score_masked(masked, resp_m, "original",
                                      model_label="adapter")
        rows += score_mod.score_pairs(pairs, resp_p, "original",
                                      model_label="adapter")
        ok = len(rows) == len(masked) + sum(len(p.alternatives) for p in pairs)
        detail = f"scored {len(rows)} trial rows"
    check("adapter_schema_conformance", ok, detail)


def test_secondary_adapter_golden_outputs_stable(adapter_built, small_eval):
    d, masked_path, pairs_path, *_ = small_eval
    hashes = []
    for trial in range(2):
        out = str(d / f"golden-{trial}.jsonl")
        r = _adapter(["respond", "--eval", masked_path, "--model", "frequency",
                      "--seed", "5", "--out", out])
        assert r.returncode == 0, r.stderr
        hashes.append(manifest_mod.sha256_file(out))
    check("adapter_golden_outputs", hashes[0] == hashes[1],
          f"hashes={hashes}")


def test_secondary_tie_only_stub_scores_zero(adapter_built, small_eval):
    d, _, pairs_path, _, pairs = small_eval
    out = str(d / "resp_tie.jsonl")
    r = _adapter(["respond", "--eval", pairs_path, "--model", "uniform",
                  "--out", out])
    assert r.returncode == 0, r.stderr
    rows = score_mod.score_pairs(pairs, score_mod.read_response_records(out),
                                 "original", model_label="tie")
    n_correct = sum(r.correct for r in rows)
    all_tied = all(r.tie for r in rows)
    check("adapter_tie_only_zero_accuracy",
          n_correct == 0 and all_tied and len(rows) > 0,
          f"correct={n_correct}/{len(rows)} all_tied={all_tied}")
