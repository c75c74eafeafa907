"""Score model responses against eval sets and run the interaction analysis.

The mixed-effects model from the analysis protocol is approximated by a
fixed-effects IRLS logistic fit plus a cluster bootstrap over
``correct_answer_id``; every report states the substitution.
"""

from __future__ import annotations

import csv
import json
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .evalgen import MaskedItem, MinimalPairItem
from .kernels import bootstrap_refit, fit_irls
from .score_words import classify_word  # re-exported scoring surface

__all__ = [
    "ResponseRecord", "TrialRow", "RegressionFit", "ScoreReport",
    "read_response_records", "write_response_records", "score_masked",
    "score_pairs", "classify_word", "fit_logistic", "cluster_bootstrap",
    "build_report",
]

MIXED_MODEL_NOTE = ("random intercept over correct_answer_id approximated by "
                    "fixed-effects IRLS with a cluster bootstrap")


class ScoreError(ValueError):
    pass


@dataclass
class ResponseRecord:
    id: str
    prediction: Optional[str] = None
    topk: Optional[list] = None
    logprob_original: Optional[float] = None
    logprob_alternatives: Optional[list] = None
    skip: Optional[str] = None


@dataclass
class TrialRow:
    correct: int
    perturb_type: str
    target_pos: str
    word_class: str
    correct_answer_id: str
    task: str = ""
    model_label: str = ""
    subtype: str = ""
    tie: bool = False


@dataclass
class RegressionFit:
    terms: list[str]
    estimates: np.ndarray
    se: np.ndarray
    iterations: int
    converged: bool
    separated: bool
    tol: float
    note: str = MIXED_MODEL_NOTE
    p_boot: Optional[np.ndarray] = None
    ci_low: Optional[np.ndarray] = None
    ci_high: Optional[np.ndarray] = None


def read_response_records(path) -> list[ResponseRecord]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ScoreError(f"response record {lineno}: invalid JSON ({exc})") from None
            if "id" not in rec:
                raise ScoreError(f"response record {lineno}: missing id")
            out.append(ResponseRecord(
                id=rec["id"], prediction=rec.get("prediction"),
                topk=rec.get("topk"),
                logprob_original=rec.get("logprob_original"),
                logprob_alternatives=rec.get("logprob_alternatives"),
                skip=rec.get("skip")))
    return out


def write_response_records(records: Iterable[ResponseRecord], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# perturbkit response records v1\n")
        for r in records:
            rec: dict = {"id": r.id}
            if r.skip is not None:
                rec["skip"] = r.skip
            elif r.prediction is not None:
                rec["prediction"] = r.prediction
                if r.topk is not None:
                    rec["topk"] = r.topk
            else:
                rec["logprob_original"] = r.logprob_original
                rec["logprob_alternatives"] = r.logprob_alternatives
            fh.write(json.dumps(rec, ensure_ascii=False))
            fh.write("\n")


def _join(items, responses) -> list[tuple]:
    by_id: dict[str, ResponseRecord] = {}
    dupes = []
    for r in responses:
        if r.id in by_id:
            dupes.append(r.id)
        by_id[r.id] = r
    if dupes:
        raise ScoreError(f"duplicate response ids: {sorted(set(dupes))[:10]}")
    item_ids = {it.id for it in items}
    stray = sorted(set(by_id) - item_ids)
    if stray:
        raise ScoreError(f"response ids not in eval set: {stray[:10]}")
    missing = sorted(item_ids - set(by_id))
    if missing:
        raise ScoreError(f"items without responses: {missing[:10]}")
    return [(it, by_id[it.id]) for it in items]


def score_masked(items: Sequence[MaskedItem], responses: Sequence[ResponseRecord],
                 perturb_type: str, model_label: str = "",
                 subtype: str = "") -> list[TrialRow]:
    """Exact-form match of top-1 prediction against the original answer."""
    rows = []
    for item, resp in _join(items, responses):
        if resp.skip is not None:
            continue
        if resp.prediction is None:
            raise ScoreError(f"{item.id}: masked response lacks a prediction")
        correct = int(resp.prediction.lower() == item.answer.lower())
        rows.append(TrialRow(correct=correct, perturb_type=perturb_type,
                             target_pos=item.target_pos,
                             word_class=item.word_class,
                             correct_answer_id=item.source_sentence_id,
                             task="masked",
                             model_label=model_label, subtype=subtype))
    return rows


def score_pairs(items: Sequence[MinimalPairItem], responses: Sequence[ResponseRecord],
                perturb_type: str, model_label: str = "",
                subtype: str = "") -> list[TrialRow]:
    """One row per alternative; correct iff the original sentence scores
    strictly higher.  Exact ties count as incorrect and are flagged."""
    rows = []
    for item, resp in _join(items, responses):
        if resp.skip is not None:
            continue
        if resp.logprob_original is None or resp.logprob_alternatives is None:
            raise ScoreError(f"{item.id}: pair response lacks log-probabilities")
        if len(resp.logprob_alternatives) != len(item.alternatives):
            raise ScoreError(
                f"{item.id}: expected {len(item.alternatives)} alternative scores, "
                f"got {len(resp.logprob_alternatives)}")
        for lp in resp.logprob_alternatives:
            tie = lp == resp.logprob_original
            rows.append(TrialRow(correct=int(resp.logprob_original > lp),
                                 perturb_type=perturb_type,
                                 target_pos=item.target_pos,
                                 word_class=item.word_class,
                                 correct_answer_id=item.source_sentence_id,
                                 task="minimal_pair",
                                 model_label=model_label, subtype=subtype,
                                 tie=tie))
    return rows


def write_trial_rows(rows: Iterable[TrialRow], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["correct", "perturb_type", "target_pos", "word_class",
                    "correct_answer_id", "task", "model_label", "subtype", "tie"])
        for r in rows:
            w.writerow([r.correct, r.perturb_type, r.target_pos, r.word_class,
                        r.correct_answer_id, r.task, r.model_label, r.subtype,
                        int(r.tie)])


def read_trial_rows(path) -> list[TrialRow]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            rows.append(TrialRow(
                correct=int(rec["correct"]), perturb_type=rec["perturb_type"],
                target_pos=rec["target_pos"], word_class=rec["word_class"],
                correct_answer_id=rec["correct_answer_id"],
                task=rec.get("task", ""),
                model_label=rec.get("model_label", ""),
                subtype=rec.get("subtype", ""),
                tie=bool(int(rec.get("tie", "0")))))
    return rows


# --- regression --------------------------------------------------------------

def build_design(rows: Sequence[TrialRow], interaction: bool = True,
                 perturb_reference: str = "original",
                 class_reference: str = "mental"):
    """Dummy-coded design matrix for correct ~ perturb_type * word_class."""
    if not rows:
        raise ScoreError("no rows to fit")
    perturb_levels = sorted({r.perturb_type for r in rows})
    class_levels = sorted({r.word_class for r in rows})
    if perturb_reference in perturb_levels:
        perturb_levels.remove(perturb_reference)
        perturb_levels.insert(0, perturb_reference)
    if class_reference in class_levels:
        class_levels.remove(class_reference)
        class_levels.insert(0, class_reference)
    if len(perturb_levels) < 2:
        raise ScoreError("perturb_type needs at least two levels")
    terms = ["intercept"]
    terms += [f"perturb[{p}]" for p in perturb_levels[1:]]
    use_class = len(class_levels) >= 2
    if use_class:
        terms += [f"class[{c}]" for c in class_levels[1:]]
        if interaction:
            terms += [f"perturb[{p}]:class[{c}]"
                      for p in perturb_levels[1:] for c in class_levels[1:]]
    n = len(rows)
    X = np.zeros((n, len(terms)))
    y = np.zeros(n)
    p_idx = {p: i for i, p in enumerate(perturb_levels[1:])}
    c_idx = {c: i for i, c in enumerate(class_levels[1:])}
    np_d = len(p_idx)
    nc_d = len(c_idx)
    for i, r in enumerate(rows):
        y[i] = r.correct
        X[i, 0] = 1.0
        pj = p_idx.get(r.perturb_type)
        cj = c_idx.get(r.word_class) if use_class else None
        if pj is not None:
            X[i, 1 + pj] = 1.0
        if use_class and cj is not None:
            X[i, 1 + np_d + cj] = 1.0
            if interaction and pj is not None:
                X[i, 1 + np_d + nc_d + pj * nc_d + cj] = 1.0
    return X, y, terms


def fit_logistic(rows: Sequence[TrialRow], interaction: bool = True,
                 tol: float = 1e-10) -> RegressionFit:
    """Maximum-likelihood logistic regression by IRLS, dummy coding with
    ``original`` and ``mental`` as reference levels."""
    X, y, terms = build_design(rows, interaction=interaction)
    beta, se, iterations, converged, separated = fit_irls(X, y, tol=tol)
    return RegressionFit(terms=terms, estimates=beta, se=se,
                         iterations=iterations, converged=converged,
                         separated=separated, tol=tol)


def cluster_bootstrap(rows: Sequence[TrialRow], B: int = 1000, seed: int = 0,
                      interaction: bool = True,
                      tol: float = 1e-10) -> RegressionFit:
    """Percentile intervals and sign-flip p-values from resampling whole
    correct_answer_id clusters with replacement."""
    if B < 100:
        raise ScoreError(f"B={B} is too few bootstrap resamples (need >= 100)")
    fit = fit_logistic(rows, interaction=interaction, tol=tol)
    ids = sorted({r.correct_answer_id for r in rows})
    if len(ids) < 2:
        raise ScoreError("cluster bootstrap needs at least two clusters")
    id_index = {c: i for i, c in enumerate(ids)}
    row_cluster = np.array([id_index[r.correct_answer_id] for r in rows],
                           dtype=np.int64)
    X, y, _ = build_design(rows, interaction=interaction)
    betas = bootstrap_refit(X, y, row_cluster, len(ids), B, seed, tol=tol)
    fit.ci_low = np.percentile(betas, 2.5, axis=0)
    fit.ci_high = np.percentile(betas, 97.5, axis=0)
    signs = np.sign(fit.estimates)
    flips = np.sum(np.sign(betas) != signs[None, :], axis=0)
    fit.p_boot = np.minimum(1.0, 2.0 * (flips + 1.0) / (B + 1.0))
    return fit


# --- reporting ---------------------------------------------------------------

@dataclass
class ConditionAccuracy:
    perturb_type: str
    subtype: str
    task: str
    target_pos: str
    word_class: str
    n: int
    accuracy: float
    chance: float
    ties: int = 0


@dataclass
class ScoreReport:
    conditions: list[ConditionAccuracy] = field(default_factory=list)
    fits: dict[str, RegressionFit] = field(default_factory=dict)
    orderings: dict[str, bool] = field(default_factory=dict)
    note: str = MIXED_MODEL_NOTE

    def accuracy(self, perturb_type: str, target_pos: str, task: str,
                 word_class: str = "all") -> Optional[float]:
        for c in self.conditions:
            if (c.perturb_type == perturb_type and c.target_pos == target_pos
                    and c.task == task and c.word_class == word_class):
                return c.accuracy
        return None

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["condition", "subtype", "task", "target_pos",
                        "word_class", "n", "accuracy", "chance", "ties"])
            for c in self.conditions:
                w.writerow([c.perturb_type, c.subtype, c.task, c.target_pos,
                            c.word_class, c.n, f"{c.accuracy:.6f}",
                            f"{c.chance:.6g}", c.ties])
            for name in sorted(self.orderings):
                w.writerow(["ordering", name, "", "", "", "", "",
                            str(self.orderings[name]).lower(), ""])

    def write_fits_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["fit", "term", "estimate", "se", "p_boot",
                        "ci_low", "ci_high", "separated"])
            for name in sorted(self.fits):
                fit = self.fits[name]
                for i, term in enumerate(fit.terms):
                    p = "" if fit.p_boot is None else f"{fit.p_boot[i]:.6f}"
                    lo = "" if fit.ci_low is None else f"{fit.ci_low[i]:.6f}"
                    hi = "" if fit.ci_high is None else f"{fit.ci_high[i]:.6f}"
                    w.writerow([name, term, f"{fit.estimates[i]:.6f}",
                                f"{fit.se[i]:.6f}", p, lo, hi,
                                str(fit.separated).lower()])

    def to_markdown(self) -> str:
        lines = ["| condition | subtype | task | pos | class | n | accuracy | chance |",
                 "|---|---|---|---|---|---|---|---|"]
        for c in self.conditions:
            lines.append(f"| {c.perturb_type} | {c.subtype or '-'} | {c.task} "
                         f"| {c.target_pos} | {c.word_class} | {c.n} "
                         f"| {c.accuracy:.4f} | {c.chance:.4g} |")
        if self.orderings:
            lines.append("")
            for name in sorted(self.orderings):
                lines.append(f"- {name}: {self.orderings[name]}")
        lines.append("")
        lines.append(f"_Analysis note: {self.note}._")
        return "\n".join(lines) + "\n"


_SUBTYPES = {"shuffle_1gram": "1gram", "shuffle_np": "np"}


def build_report(rows: Sequence[TrialRow], fits: Optional[dict] = None,
                 chance: Optional[dict] = None) -> ScoreReport:
    """Per-condition accuracy table plus the expected-ordering flags.

    ``chance`` maps task name to the chance baseline (0.5 for minimal
    pairs, 1/|candidates| for masked prediction)."""
    chance = chance or {}
    report = ScoreReport(fits=fits or {})
    groups: dict[tuple, list[TrialRow]] = defaultdict(list)
    for r in rows:
        groups[(r.perturb_type, r.subtype, r.task, r.target_pos, r.word_class)].append(r)
        groups[(r.perturb_type, r.subtype, r.task, r.target_pos, "all")].append(r)
    for key in sorted(groups):
        grp = groups[key]
        perturb_type, subtype, task, target_pos, word_class = key
        report.conditions.append(ConditionAccuracy(
            perturb_type=perturb_type, subtype=subtype, task=task,
            target_pos=target_pos, word_class=word_class, n=len(grp),
            accuracy=sum(r.correct for r in grp) / len(grp),
            chance=chance.get(task, float("nan")),
            ties=sum(r.tie for r in grp)))

    def acc(perturb_type, pos, task):
        grp = [r for r in rows if r.perturb_type == perturb_type
               and r.target_pos == pos and r.task == task]
        return sum(r.correct for r in grp) / len(grp) if grp else None

    tasks = sorted({r.task for r in rows})
    for task in tasks:
        for pos, name in (("VERB", "verbs"), ("NOUN", "nouns")):
            orig = acc("original", pos, task)
            rep_kind = "replace_word_verb" if pos == "VERB" else "replace_word_noun"
            rep = acc(rep_kind, pos, task)
            shuf = acc("shuffle_1gram", pos, task)
            if None in (orig, rep, shuf):
                continue
            if pos == "VERB":
                report.orderings[f"{name}_{task}_original>replace>shuffle"] = (
                    orig > rep > shuf)
            else:
                report.orderings[f"{name}_{task}_original>shuffle>replace"] = (
                    orig > shuf > rep)
    return report
