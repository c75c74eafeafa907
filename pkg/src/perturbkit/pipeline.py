"""End-to-end run: synthetic corpus, tagger, all perturbation conditions,
eval sets, n-gram training and responses, scores, and the final report.

Everything is derived from one top-level seed; the run directory carries a
manifest with a hash for every artifact.
"""

from __future__ import annotations

import os
from collections import Counter

import numpy as np
from dataclasses import dataclass, field

from . import corpus as corpus_mod
from . import datagen, evalgen, lexicon, ngram, respond
from . import manifest as manifest_mod
from . import perturb as perturb_mod
from . import score as score_mod
from . import tagger as tagger_mod

CONDITIONS = ("original", "replace_word_verb", "replace_word_noun",
              "shuffle_1gram", "shuffle_np")

TAGGER_GOLD_SENTENCES = 4000


@dataclass
class PipelineResult:
    run_dir: str
    manifest_path: str
    report_csv: str
    fits_csv: str
    report_md: str
    eval_paths: dict = field(default_factory=dict)
    row_paths: dict = field(default_factory=dict)
    model_paths: dict = field(default_factory=dict)
    text_paths: dict = field(default_factory=dict)
    tagger_accuracy: float = 0.0
    masked_chance: float = 0.0


def run_pipeline(run_dir, config: dict) -> PipelineResult:
    os.makedirs(run_dir, exist_ok=True)
    for sub in ("corpus", "perturbed", "eval", "models", "responses",
                "rows", "report"):
        os.makedirs(os.path.join(run_dir, sub), exist_ok=True)
    seed = int(config["seed"])
    m = manifest_mod.RunManifest(command="pipeline", seed=seed, config=config)

    def path(*parts):
        return os.path.join(run_dir, *parts)

    # 1. corpus
    train = datagen.generate_split(int(config["train_sentences"]), seed=seed,
                                   split="train", tagged=False)
    test = datagen.generate_split(int(config["test_sentences"]), seed=seed,
                                  split="test", tagged=False)
    gold = datagen.generate_split(TAGGER_GOLD_SENTENCES, seed=seed, split="gold")
    corpus_mod.write_raw_file(train, path("corpus", "train.txt"))
    corpus_mod.write_raw_file(test, path("corpus", "test.txt"))
    corpus_mod.write_conllu_file(gold, path("corpus", "gold.conllu"))

    # 2. tagger
    gold_sents = list(gold)
    heldout, train_gold = gold_sents[:400], gold_sents[400:]
    tagger = tagger_mod.train_tagger(train_gold, epochs=int(config["tagger_epochs"]),
                                     seed=seed)
    tagger.save(path("models", "tagger.txt"))
    tagger_accuracy = tagger_mod.evaluate_tagger(tagger, heldout)
    m.add_counter("tagger", "heldout_accuracy", round(tagger_accuracy, 6))

    # 3. annotation
    train_ann = tagger_mod.annotate_split(train, tagger)
    test_ann = tagger_mod.annotate_split(test, tagger)
    corpus_mod.write_conllu_file(train_ann, path("corpus", "train.tagged.conllu"))
    corpus_mod.write_conllu_file(test_ann, path("corpus", "test.tagged.conllu"))

    # 4. perturbed training corpora
    table = lexicon.build_frequency_table(train_ann)
    table.write_tsv(path("corpus", "train.freq.tsv"))
    text_paths = {}
    for kind in CONDITIONS:
        spec = perturb_mod.PerturbationSpec(kind=kind, seed=seed)
        stats = perturb_mod.PerturbStats()
        out_split = perturb_mod.perturb_corpus(train_ann, spec, table, stats)
        out_path = path("perturbed", f"{kind}.txt")
        corpus_mod.write_raw_file(out_split, out_path)
        text_paths[kind] = out_path
        m.add_counter(f"perturb.{kind}", "sentences", stats.sentences)
        m.add_counter(f"perturb.{kind}", "replaced_tokens", stats.replaced_tokens)
        m.add_counter(f"perturb.{kind}", "noop_replacements", stats.noop_replacements)

    # 5. eval sets from the ORIGINAL test split
    vocab_counts = Counter(t.form for s in train_ann for t in s.tokens)
    vocab_forms = sorted(f for f, c in vocab_counts.items()
                         if c >= int(config["ngram_unk_threshold"]))
    vocab_path = path("eval", "vocab.txt")
    with open(vocab_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(vocab_forms) + "\n")
    vocab = evalgen.VocabPredicate.from_file(vocab_path)
    # masked prediction ranges over the in-vocabulary forms the tagger saw
    # with the target part of speech in the training split
    in_vocab = set(vocab_forms)
    candidates = {}

    eval_paths = {}
    eval_items = {}
    test_table = lexicon.build_frequency_table(test_ann)
    for pos in ("VERB", "NOUN"):
        stats = evalgen.EvalGenStats()
        items = evalgen.build_masked_set(test_ann, pos, vocab, seed=seed,
                                         stats=stats)
        # candidate pool: in-vocabulary forms seen with this PoS in training,
        # plus every eval answer so each item is gettable
        pool = {f for f in lexicon.ranked_forms(table, pos) if f in in_vocab}
        pool.update(item.answer for item in items)
        candidates[pos] = sorted(pool)
        m.add_counter("eval", f"masked_candidates_{pos.lower()}", len(pool))
        with open(path("eval", f"candidates_{pos.lower()}.txt"), "w",
                  encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(candidates[pos]) + "\n")
        key = f"masked_{pos.lower()}"
        eval_paths[key] = path("eval", f"{key}.jsonl")
        evalgen.write_eval_records(items, eval_paths[key])
        eval_items[key] = items
        m.add_counter(f"eval.{key}", "emitted", stats.emitted)
        m.add_counter(f"eval.{key}", "skipped_vocab", stats.skipped_vocab)

        bins = lexicon.bin_by_log_rank(test_table, pos, k=4)
        stats = evalgen.EvalGenStats()
        items = evalgen.build_minimal_pairs(
            test_ann, pos, bins, n_alt=int(config["n_alt"]),
            min_len=int(config["min_len"]),
            count_punct=bool(int(config["count_punct"])), seed=seed,
            stats=stats)
        key = f"pairs_{pos.lower()}"
        eval_paths[key] = path("eval", f"{key}.jsonl")
        evalgen.write_eval_records(items, eval_paths[key])
        eval_items[key] = items
        m.add_counter(f"eval.{key}", "emitted", stats.emitted)
        m.add_counter(f"eval.{key}", "skipped_insufficient_bin",
                      stats.skipped_insufficient_bin)

    masked_chance = 1.0 / max(len(c) for c in candidates.values())

    # 6. n-gram models per condition, responses, scores
    model_paths = {}
    row_paths = {}
    all_rows = []
    for kind in CONDITIONS:
        model = ngram.train_ngram_file(text_paths[kind],
                                       order=int(config["ngram_order"]),
                                       unk_threshold=int(config["ngram_unk_threshold"]),
                                       discount=float(config["ngram_discount"]))
        model_paths[kind] = path("models", f"{kind}.ngram.txt")
        model.save(model_paths[kind])
        subtype = {"shuffle_1gram": "1gram", "shuffle_np": "np"}.get(kind, "")
        for key, items in eval_items.items():
            if key.startswith("masked"):
                pos = "VERB" if key.endswith("verb") else "NOUN"
                records = respond.respond_masked(model, items, candidates[pos])
            else:
                records = respond.respond_pairs(model, items)
            resp_path = path("responses", f"{kind}.{key}.jsonl")
            score_mod.write_response_records(records, resp_path)
            if key.startswith("masked"):
                rows = score_mod.score_masked(items, records, kind,
                                              model_label="ngram",
                                              subtype=subtype)
            else:
                rows = score_mod.score_pairs(items, records, kind,
                                             model_label="ngram",
                                             subtype=subtype)
            row_paths[(kind, key)] = path("rows", f"{kind}.{key}.csv")
            score_mod.write_trial_rows(rows, row_paths[(kind, key)])
            all_rows += rows

    # 7. report with the verb-class interaction fit on minimal pairs
    fits = {}
    fit_rows = [r for r in all_rows
                if r.task == "minimal_pair" and r.target_pos == "VERB"
                and r.word_class in ("mental", "physical")
                and r.perturb_type in ("original", "replace_word_verb",
                                       "shuffle_1gram")]
    if fit_rows:
        try:
            fits["verb_class_interaction"] = score_mod.cluster_bootstrap(
                fit_rows, B=int(config["bootstrap_b"]), seed=seed)
        except (score_mod.ScoreError, np.linalg.LinAlgError) as exc:
            m.add_counter("report", "fit_error", str(exc))
    report = score_mod.build_report(
        all_rows, fits=fits,
        chance={"masked": masked_chance, "minimal_pair": 0.5})
    report_csv = path("report", "report.csv")
    fits_csv = path("report", "fits.csv")
    report_md = path("report", "report.md")
    report.write_csv(report_csv)
    report.write_fits_csv(fits_csv)
    with open(report_md, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report.to_markdown())
    for name, value in report.orderings.items():
        m.add_counter("report", name, value)

    # manifest covers every artifact
    for sub in ("corpus", "perturbed", "eval", "models", "responses",
                "rows", "report"):
        d = path(sub)
        for fn in sorted(os.listdir(d)):
            m.add_file(os.path.join(d, fn), role="output", base_dir=run_dir)
    manifest_path = path("manifest.jsonl")
    m.write(manifest_path)

    return PipelineResult(
        run_dir=str(run_dir), manifest_path=manifest_path,
        report_csv=report_csv, fits_csv=fits_csv, report_md=report_md,
        eval_paths=eval_paths, row_paths=row_paths, model_paths=model_paths,
        text_paths=text_paths, tagger_accuracy=tagger_accuracy,
        masked_chance=masked_chance)
