"""Command-line pipeline: ingest, tag, perturb, build eval sets, train and
run the embedded n-gram model, score, report, verify.

Exit codes: 0 ok, 2 usage error, 3 data error, 4 verification failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from collections import Counter

from . import __version__
from . import corpus as corpus_mod
from . import datagen, evalgen, lexicon, manifest as manifest_mod, ngram
from . import perturb as perturb_mod
from . import respond, score as score_mod, tagger as tagger_mod

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_VERIFY = 4

CONFIG_ENV = "PERTURBKIT_CONFIG"


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_DATA):
        super().__init__(message)
        self.code = code


def _manifest_for(args, command: str) -> manifest_mod.RunManifest:
    return manifest_mod.RunManifest(command=command, seed=getattr(args, "seed", 0),
                                    config={k: v for k, v in vars(args).items()
                                            if k not in ("func", "manifest")})


def _finish(m: manifest_mod.RunManifest, args, outputs) -> None:
    for path in outputs:
        m.add_file(path, role="output")
    path = getattr(args, "manifest", None)
    if path is None and outputs:
        path = str(outputs[0]) + ".manifest.jsonl"
    if path:
        m.write(path)


def _read_corpus(path, split: str):
    if str(path).endswith((".conllu", ".conll")):
        return corpus_mod.read_conllu_file(path, split=split)
    return corpus_mod.read_raw_file(path, split=split)


def _annotated_corpus(path, split: str, tagger_path=None):
    split_data = _read_corpus(path, split)
    if tagger_path:
        model = tagger_mod.TaggerModel.load(tagger_path)
        return tagger_mod.annotate_split(split_data, model)
    if any(t.upos is None for s in split_data for t in s.tokens):
        raise CliError(f"{path}: corpus lacks PoS tags; pass --tagger")
    return tagger_mod.resolve_annotations(split_data)


# --- subcommands -------------------------------------------------------------

def cmd_gen_corpus(args) -> int:
    split = datagen.generate_split(args.n, seed=args.seed, split=args.split)
    m = _manifest_for(args, "gen-corpus")
    outputs = []
    if args.out:
        corpus_mod.write_raw_file(split, args.out)
        outputs.append(args.out)
    if args.conllu:
        corpus_mod.write_conllu_file(split, args.conllu)
        outputs.append(args.conllu)
    if not outputs:
        raise CliError("gen-corpus: need --out and/or --conllu", EXIT_USAGE)
    m.add_counter("gen-corpus", "sentences", len(split))
    _finish(m, args, outputs)
    return EXIT_OK


def cmd_ingest(args) -> int:
    stats = corpus_mod.IngestStats()
    annotator = None
    if args.tagger:
        model = tagger_mod.TaggerModel.load(args.tagger)
        annotator = lambda s: tagger_mod.annotate(s, model)
    split = corpus_mod.read_raw_file(args.input, split=args.split,
                                     annotator=annotator,
                                     max_tokens=args.max_tokens, stats=stats)
    corpus_mod.write_conllu_file(split, args.out)
    m = _manifest_for(args, "ingest")
    m.add_counter("ingest", "read", stats.read)
    m.add_counter("ingest", "emitted", stats.emitted)
    m.add_counter("ingest", "skipped_empty", stats.skipped_empty)
    m.add_counter("ingest", "skipped_too_long", stats.skipped_too_long)
    _finish(m, args, [args.out])
    return EXIT_OK


def cmd_train_tagger(args) -> int:
    gold = corpus_mod.read_conllu_file(args.gold, split="gold")
    sentences = list(gold)
    heldout = []
    if args.heldout_fraction > 0:
        k = max(1, int(len(sentences) * args.heldout_fraction))
        heldout, sentences = sentences[:k], sentences[k:]
    model = tagger_mod.train_tagger(sentences, epochs=args.epochs, seed=args.seed)
    model.save(args.out)
    m = _manifest_for(args, "train-tagger")
    m.add_counter("train-tagger", "train_sentences", len(sentences))
    if heldout:
        acc = tagger_mod.evaluate_tagger(model, heldout)
        m.add_counter("train-tagger", "heldout_accuracy", round(acc, 6))
        print(f"heldout accuracy: {acc:.4f}")
    _finish(m, args, [args.out])
    return EXIT_OK


def cmd_tag(args) -> int:
    annotated = _annotated_corpus(args.input, args.split, args.tagger)
    corpus_mod.write_conllu_file(annotated, args.out)
    m = _manifest_for(args, "tag")
    m.add_counter("tag", "sentences", len(annotated))
    _finish(m, args, [args.out])
    return EXIT_OK


def cmd_perturb(args) -> int:
    annotated = _annotated_corpus(args.input, args.split, args.tagger)
    spec = perturb_mod.PerturbationSpec(kind=args.kind, seed=args.seed,
                                        granularity=args.granularity)
    table = None
    if spec.kind.startswith("replace"):
        freq_source = annotated
        if args.freq_corpus:
            freq_source = _annotated_corpus(args.freq_corpus, "freq", args.tagger)
        table = lexicon.build_frequency_table(freq_source,
                                              granularity=args.granularity)
    stats = perturb_mod.PerturbStats()
    out_split = perturb_mod.perturb_corpus(annotated, spec, table, stats)
    outputs = []
    if args.out:
        corpus_mod.write_conllu_file(out_split, args.out)
        outputs.append(args.out)
    if args.text_out:
        corpus_mod.write_raw_file(out_split, args.text_out)
        outputs.append(args.text_out)
    if not outputs:
        raise CliError("perturb: need --out and/or --text-out", EXIT_USAGE)
    m = _manifest_for(args, "perturb")
    m.add_counter("perturb", "sentences", stats.sentences)
    m.add_counter("perturb", "replaced_tokens", stats.replaced_tokens)
    m.add_counter("perturb", "noop_replacements", stats.noop_replacements)
    m.add_counter("perturb", "unknown_pos_tokens", stats.unknown_pos_tokens)
    _finish(m, args, outputs)
    return EXIT_OK


def cmd_vocab(args) -> int:
    split = _read_corpus(args.input, "vocab")
    counts = Counter(t.form for s in split for t in s.tokens)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        for form in sorted(f for f, c in counts.items() if c >= args.min_count):
            fh.write(form + "\n")
    m = _manifest_for(args, "vocab")
    m.add_counter("vocab", "forms", len(counts))
    _finish(m, args, [args.out])
    return EXIT_OK


def cmd_build_eval(args) -> int:
    annotated = _annotated_corpus(args.test, "test", args.tagger)
    stats = evalgen.EvalGenStats()
    if args.task == "masked":
        vocab = evalgen.VocabPredicate.from_file(args.vocab)
        items = evalgen.build_masked_set(annotated, args.target_pos, vocab,
                                         seed=args.seed, stats=stats)
    else:
        table = lexicon.build_frequency_table(annotated)
        bins = lexicon.bin_by_log_rank(table, args.target_pos, k=4)
        items = evalgen.build_minimal_pairs(annotated, args.target_pos, bins,
                                            n_alt=args.n_alt,
                                            min_len=args.min_len,
                                            count_punct=not args.no_count_punct,
                                            seed=args.seed, stats=stats)
    evalgen.write_eval_records(items, args.out)
    m = _manifest_for(args, "build-eval")
    for name in ("candidates", "emitted", "skipped_no_target", "skipped_vocab",
                 "skipped_short", "skipped_insufficient_bin"):
        m.add_counter("build-eval", name, getattr(stats, name))
    _finish(m, args, [args.out])
    return EXIT_OK


def cmd_ngram_train(args) -> int:
    model = ngram.train_ngram_file(args.input, order=args.order,
                                   unk_threshold=args.unk_threshold,
                                   discount=args.discount)
    model.save(args.out)
    m = _manifest_for(args, "ngram-train")
    m.add_counter("ngram-train", "vocab", len(model.vocab))
    _finish(m, args, [args.out])
    return EXIT_OK


def cmd_ngram_respond(args) -> int:
    model = ngram.NGramModel.load(args.model)
    items = evalgen.read_eval_records(args.eval)
    masked = [i for i in items if isinstance(i, evalgen.MaskedItem)]
    pairs = [i for i in items if isinstance(i, evalgen.MinimalPairItem)]
    records = []
    if masked:
        if not args.candidates:
            raise CliError("ngram-respond: masked eval needs --candidates",
                           EXIT_USAGE)
        with open(args.candidates, encoding="utf-8") as fh:
            cands = [line.strip() for line in fh if line.strip()]
        records += respond.respond_masked(model, masked, cands)
    if pairs:
        records += respond.respond_pairs(model, pairs)
    score_mod.write_response_records(records, args.out)
    m = _manifest_for(args, "ngram-respond")
    m.add_counter("ngram-respond", "responses", len(records))
    _finish(m, args, [args.out])
    return EXIT_OK


def cmd_score(args) -> int:
    items = evalgen.read_eval_records(args.eval)
    responses = score_mod.read_response_records(args.responses)
    masked = [i for i in items if isinstance(i, evalgen.MaskedItem)]
    pairs = [i for i in items if isinstance(i, evalgen.MinimalPairItem)]
    subtype = {"shuffle_1gram": "1gram", "shuffle_np": "np"}.get(args.perturb_type, "")
    rows = []
    if masked:
        rows += score_mod.score_masked(masked, [r for r in responses
                                                if r.prediction is not None or r.skip],
                                       args.perturb_type, args.model_label, subtype)
    if pairs:
        rows += score_mod.score_pairs(pairs, [r for r in responses
                                              if r.logprob_original is not None or r.skip],
                                      args.perturb_type, args.model_label, subtype)
    score_mod.write_trial_rows(rows, args.out)
    m = _manifest_for(args, "score")
    m.add_counter("score", "rows", len(rows))
    m.add_counter("score", "accuracy",
                  round(sum(r.correct for r in rows) / len(rows), 6) if rows else 0)
    _finish(m, args, [args.out])
    return EXIT_OK


def cmd_report(args) -> int:
    rows = []
    for path in args.rows:
        rows += score_mod.read_trial_rows(path)
    chance = {}
    if args.chance_masked is not None:
        chance["masked"] = args.chance_masked
    if args.chance_pairs is not None:
        chance["minimal_pair"] = args.chance_pairs
    fits = {}
    if args.fit:
        fit_rows = [r for r in rows if r.target_pos == "VERB"
                    and r.word_class in ("mental", "physical")]
        if fit_rows:
            try:
                fits["verb_class_interaction"] = score_mod.cluster_bootstrap(
                    fit_rows, B=args.bootstrap_b, seed=args.seed)
            except score_mod.ScoreError as exc:
                print(f"warning: interaction fit skipped ({exc})", file=sys.stderr)
    report = score_mod.build_report(rows, fits=fits, chance=chance)
    outputs = [args.out]
    report.write_csv(args.out)
    if args.fits_out and fits:
        report.write_fits_csv(args.fits_out)
        outputs.append(args.fits_out)
    if args.markdown_out:
        with open(args.markdown_out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(report.to_markdown())
        outputs.append(args.markdown_out)
    m = _manifest_for(args, "report")
    for name, value in report.orderings.items():
        m.add_counter("report", name, value)
    _finish(m, args, outputs)
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        problems = manifest_mod.verify(args.manifest_path)
    except FileNotFoundError:
        raise CliError(f"manifest not found: {args.manifest_path}", EXIT_VERIFY)
    except manifest_mod.ManifestError as exc:
        raise CliError(f"manifest schema error: {exc}", EXIT_DATA)
    if problems:
        for p in problems:
            print(f"FAIL {p}")
        return EXIT_VERIFY
    print("PASS all hashes match")
    return EXIT_OK


def cmd_pipeline(args) -> int:
    """End-to-end run on a generated corpus: all perturbation conditions,
    eval sets, n-gram responses, scores, and final report."""
    from .pipeline import run_pipeline
    config = dict(manifest_mod.CONFIG_DEFAULTS)
    config_path = args.config or os.environ.get(CONFIG_ENV)
    if config_path:
        config.update(manifest_mod.load_config(config_path))
    config["seed"] = args.seed if args.seed is not None else config["seed"]
    if args.train_sentences:
        config["train_sentences"] = args.train_sentences
    if args.test_sentences:
        config["test_sentences"] = args.test_sentences
    run_pipeline(args.out, config)
    return EXIT_OK


# --- argument parsing --------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="perturbkit",
                                description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, **kw):
        sp = sub.add_parser(name, **kw)
        sp.set_defaults(func=fn)
        sp.add_argument("--manifest", help="manifest output path")
        return sp

    sp = add("gen-corpus", cmd_gen_corpus, help="generate a synthetic corpus")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--split", default="train")
    sp.add_argument("--out", help="raw text output")
    sp.add_argument("--conllu", help="gold CoNLL-U output")

    sp = add("ingest", cmd_ingest, help="raw utterance lines to CoNLL-U")
    sp.add_argument("--input", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--split", default="train")
    sp.add_argument("--tagger")
    sp.add_argument("--max-tokens", type=int, default=512)
    sp.add_argument("--seed", type=int, default=0)

    sp = add("train-tagger", cmd_train_tagger, help="train the PoS tagger")
    sp.add_argument("--gold", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--epochs", type=int, default=5)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--heldout-fraction", type=float, default=0.0)

    sp = add("tag", cmd_tag, help="annotate a corpus (tags, NPs, main verbs)")
    sp.add_argument("--input", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--split", default="train")
    sp.add_argument("--tagger")
    sp.add_argument("--seed", type=int, default=0)

    sp = add("perturb", cmd_perturb, help="apply a training-data perturbation")
    sp.add_argument("--input", required=True)
    sp.add_argument("--kind", required=True, choices=perturb_mod.KINDS)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--split", default="train")
    sp.add_argument("--granularity", default="coarse", choices=["coarse", "fine"])
    sp.add_argument("--tagger")
    sp.add_argument("--freq-corpus")
    sp.add_argument("--out", help="CoNLL-U output")
    sp.add_argument("--text-out", help="space-joined text output")

    sp = add("vocab", cmd_vocab, help="write the corpus vocabulary")
    sp.add_argument("--input", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--min-count", type=int, default=1)
    sp.add_argument("--seed", type=int, default=0)

    sp = add("build-eval", cmd_build_eval, help="build an evaluation set")
    sp.add_argument("--test", required=True)
    sp.add_argument("--task", required=True, choices=["masked", "minimal_pair"])
    sp.add_argument("--target-pos", default="VERB", choices=["VERB", "NOUN"])
    sp.add_argument("--vocab", help="single-token vocabulary file (masked task)")
    sp.add_argument("--n-alt", type=int, default=5)
    sp.add_argument("--min-len", type=int, default=10)
    sp.add_argument("--no-count-punct", action="store_true")
    sp.add_argument("--tagger")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)

    sp = add("ngram-train", cmd_ngram_train, help="train the n-gram LM")
    sp.add_argument("--input", required=True)
    sp.add_argument("--order", type=int, default=3)
    sp.add_argument("--discount", type=float, default=0.75)
    sp.add_argument("--unk-threshold", type=int, default=2)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)

    sp = add("ngram-respond", cmd_ngram_respond, help="answer an eval file")
    sp.add_argument("--model", required=True)
    sp.add_argument("--eval", required=True)
    sp.add_argument("--candidates", help="candidate vocabulary for masked items")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)

    sp = add("score", cmd_score, help="score responses into trial rows")
    sp.add_argument("--eval", required=True)
    sp.add_argument("--responses", required=True)
    sp.add_argument("--perturb-type", required=True)
    sp.add_argument("--model-label", default="ngram")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)

    sp = add("report", cmd_report, help="aggregate trial rows into a report")
    sp.add_argument("--rows", nargs="+", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--fits-out")
    sp.add_argument("--markdown-out")
    sp.add_argument("--fit", action="store_true",
                    help="fit the verb-class interaction model")
    sp.add_argument("--bootstrap-b", type=int, default=1000)
    sp.add_argument("--chance-masked", type=float)
    sp.add_argument("--chance-pairs", type=float)
    sp.add_argument("--seed", type=int, default=0)

    sp = add("verify", cmd_verify, help="recheck a run manifest's hashes")
    sp.add_argument("manifest_path")

    sp = add("pipeline", cmd_pipeline, help="full end-to-end run")
    sp.add_argument("--out", required=True)
    sp.add_argument("--config")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--train-sentences", type=int)
    sp.add_argument("--test-sentences", type=int)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error\t{args.command}\t{exc}", file=sys.stderr)
        return exc.code
    except (corpus_mod.CorpusError, tagger_mod.TaggerError, lexicon.LexiconError,
            perturb_mod.PerturbError, evalgen.EvalGenError, ngram.NGramError,
            score_mod.ScoreError, manifest_mod.ManifestError,
            manifest_mod.ConfigError, FileNotFoundError) as exc:
        print(f"error\t{args.command}\t{exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
