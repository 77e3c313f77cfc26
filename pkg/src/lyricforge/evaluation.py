"""Detection metrics and annotation-agreement statistics.

Macro-recall (unweighted mean of per-class recalls) is the primary detection
metric; micro recall is the overall fraction correct. AUROC uses the rank
(Mann-Whitney) formulation with ties counting one half.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .corpus import HUMAN, LABELS, SYNTHETIC, iter_jsonl
from .errors import EmptyInputError, FormatError, ValidationError

CONFIDENCE_LEVELS = (1, 2, 3, 4)


@dataclass(frozen=True)
class RecallMetrics:
    recall_human: float
    recall_synthetic: float
    macro_recall: float
    micro_recall: float


def recall_metrics(predictions: Sequence[str], truths: Sequence[str]) -> RecallMetrics:
    """Per-class recall plus macro and micro recall; both classes must occur."""
    if len(predictions) != len(truths):
        raise ValidationError("predictions and truths must be aligned")
    if not truths:
        raise EmptyInputError("no predictions to score")
    counts = {label: 0 for label in LABELS}
    correct = {label: 0 for label in LABELS}
    for pred, truth in zip(predictions, truths):
        if truth not in counts or pred not in counts:
            raise ValidationError(f"labels must be in {LABELS}")
        counts[truth] += 1
        if pred == truth:
            correct[truth] += 1
    for label in LABELS:
        if counts[label] == 0:
            raise ValidationError(f"class {label!r} absent from truths")
    recall_h = correct[HUMAN] / counts[HUMAN]
    recall_s = correct[SYNTHETIC] / counts[SYNTHETIC]
    return RecallMetrics(
        recall_human=recall_h,
        recall_synthetic=recall_s,
        macro_recall=(recall_h + recall_s) / 2.0,
        micro_recall=(correct[HUMAN] + correct[SYNTHETIC]) / len(truths),
    )


def auroc(scores_synthetic: Sequence[float], truths: Sequence[str]) -> float:
    """Probability a random synthetic document outscores a random human one."""
    if len(scores_synthetic) != len(truths):
        raise ValidationError("scores and truths must be aligned")
    pos = [s for s, t in zip(scores_synthetic, truths) if t == SYNTHETIC]
    neg = [s for s, t in zip(scores_synthetic, truths) if t == HUMAN]
    if not pos or not neg:
        raise ValidationError("AUROC needs both classes present")
    # Midranks over the pooled sample.
    pooled = sorted(range(len(scores_synthetic)), key=lambda i: scores_synthetic[i])
    ranks = [0.0] * len(pooled)
    i = 0
    while i < len(pooled):
        j = i
        while j + 1 < len(pooled) and scores_synthetic[pooled[j + 1]] == scores_synthetic[pooled[i]]:
            j += 1
        mid = (i + j) / 2.0 + 1.0
        for idx in pooled[i : j + 1]:
            ranks[idx] = mid
        i = j + 1
    rank_sum_pos = sum(r for r, t in zip(ranks, truths) if t == SYNTHETIC)
    u = rank_sum_pos - len(pos) * (len(pos) + 1) / 2.0
    return u / (len(pos) * len(neg))


def _check_pair(labels_a: Sequence[str], labels_b: Sequence[str]) -> None:
    if len(labels_a) != len(labels_b):
        raise ValidationError("label lists must have equal length")
    if not labels_a:
        raise EmptyInputError("empty label lists")
    for label in list(labels_a) + list(labels_b):
        if label not in LABELS:
            raise ValidationError(f"labels must be in {LABELS}, got {label!r}")


def raw_agreement(labels_a: Sequence[str], labels_b: Sequence[str]) -> float:
    """Fraction of items both raters labeled identically."""
    _check_pair(labels_a, labels_b)
    return sum(1 for a, b in zip(labels_a, labels_b) if a == b) / len(labels_a)


def cohen_kappa(labels_a: Sequence[str], labels_b: Sequence[str]) -> float:
    """Chance-corrected agreement with expectancy from marginal products."""
    _check_pair(labels_a, labels_b)
    n = len(labels_a)
    p_o = raw_agreement(labels_a, labels_b)
    p_e = 0.0
    for label in LABELS:
        pa = sum(1 for x in labels_a if x == label) / n
        pb = sum(1 for x in labels_b if x == label) / n
        p_e += pa * pb
    if p_e == 1.0:
        if p_o == 1.0:
            return 1.0
        raise ValidationError("kappa undefined: chance agreement is 1 but observed is not")
    return (p_o - p_e) / (1.0 - p_e)


def gwet_ac1(labels_a: Sequence[str], labels_b: Sequence[str]) -> float:
    """Gwet's first-order agreement coefficient for two raters, binary labels."""
    _check_pair(labels_a, labels_b)
    n = len(labels_a)
    p_o = raw_agreement(labels_a, labels_b)
    pi = (
        sum(1 for x in labels_a if x == SYNTHETIC) / n + sum(1 for x in labels_b if x == SYNTHETIC) / n
    ) / 2.0
    p_gamma = 2.0 * pi * (1.0 - pi)
    return (p_o - p_gamma) / (1.0 - p_gamma)


# ---------------------------------------------------------------------------
# Annotation files and the agreement report


@dataclass(frozen=True)
class Annotation:
    rater: str
    doc_id: str
    label: str
    confidence: int

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValidationError(f"label must be in {LABELS}, got {self.label!r}")
        if self.confidence not in CONFIDENCE_LEVELS:
            raise ValidationError(f"confidence must be in {CONFIDENCE_LEVELS}, got {self.confidence}")


def read_annotations(path) -> list[Annotation]:
    out = []
    for line_no, obj in iter_jsonl(path):
        if not isinstance(obj, dict) or set(obj) != {"rater", "doc_id", "label", "confidence"}:
            raise FormatError(
                "fields must be exactly ['rater', 'doc_id', 'label', 'confidence']", path=path, line=line_no
            )
        try:
            out.append(Annotation(obj["rater"], obj["doc_id"], obj["label"], obj["confidence"]))
        except (ValidationError, TypeError) as exc:
            raise FormatError(str(exc), path=path, line=line_no) from exc
    return out


def write_annotations(annotations: Iterable[Annotation], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for ann in annotations:
            record = {
                "rater": ann.rater,
                "doc_id": ann.doc_id,
                "label": ann.label,
                "confidence": ann.confidence,
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def confidence_summary(
    items: Iterable[tuple[str, int, bool]],
) -> dict[str, tuple[float | None, float | None]]:
    """Per-rater mean confidence for correct and incorrect annotations.

    Items are (rater, confidence, correct); an absent cell yields None.
    """
    per_rater: dict[str, tuple[list[int], list[int]]] = {}
    for rater, confidence, correct in items:
        if confidence not in CONFIDENCE_LEVELS:
            raise ValidationError(f"confidence must be in {CONFIDENCE_LEVELS}, got {confidence}")
        buckets = per_rater.setdefault(rater, ([], []))
        buckets[0 if correct else 1].append(confidence)
    out = {}
    for rater, (good, bad) in sorted(per_rater.items()):
        mean_correct = sum(good) / len(good) if good else None
        mean_incorrect = sum(bad) / len(bad) if bad else None
        out[rater] = (mean_correct, mean_incorrect)
    return out


@dataclass(frozen=True)
class AgreementReport:
    pairs: tuple[tuple[str, str, float, float, float, int], ...]  # (a, b, agreement %, kappa, ac1, n)
    confidence: dict[str, tuple[float | None, float | None]]

    def to_json_obj(self) -> dict:
        return {
            "pairs": [
                {"raters": [a, b], "agreement_pct": agr, "kappa": k, "ac1": g, "n": n}
                for a, b, agr, k, g, n in self.pairs
            ],
            "confidence": {
                rater: {"mean_correct": c, "mean_incorrect": i}
                for rater, (c, i) in sorted(self.confidence.items())
            },
        }


def agreement_report(annotations: Sequence[Annotation], truth_labels: dict[str, str]) -> AgreementReport:
    """Pairwise agreement statistics plus per-rater confidence summaries."""
    by_rater: dict[str, dict[str, Annotation]] = {}
    for ann in annotations:
        if ann.doc_id not in truth_labels:
            raise ValidationError(f"annotation for unknown document {ann.doc_id!r}")
        if ann.doc_id in by_rater.setdefault(ann.rater, {}):
            raise ValidationError(f"rater {ann.rater!r} annotated {ann.doc_id!r} twice")
        by_rater[ann.rater][ann.doc_id] = ann
    if not by_rater:
        raise EmptyInputError("no annotations")
    raters = sorted(by_rater)
    pairs = []
    for i, a in enumerate(raters):
        for b in raters[i + 1 :]:
            shared = sorted(set(by_rater[a]) & set(by_rater[b]))
            if not shared:
                continue
            la = [by_rater[a][d].label for d in shared]
            lb = [by_rater[b][d].label for d in shared]
            pairs.append(
                (a, b, 100.0 * raw_agreement(la, lb), cohen_kappa(la, lb), gwet_ac1(la, lb), len(shared))
            )
    items = [
        (ann.rater, ann.confidence, ann.label == truth_labels[ann.doc_id])
        for rater in raters
        for ann in by_rater[rater].values()
    ]
    return AgreementReport(pairs=tuple(pairs), confidence=confidence_summary(items))


def render_agreement_text(report: AgreementReport) -> str:
    lines = ["Pair           Kappa     AC1   Agreement%     n"]
    for a, b, agr, kappa, ac1, n in report.pairs:
        lines.append(f"{a} & {b:<8}{kappa:>8.4f}{ac1:>8.4f}{agr:>12.2f}{n:>6d}")
    lines.append("")
    lines.append("Rater  mean_conf_correct  mean_conf_incorrect")
    for rater, (good, bad) in sorted(report.confidence.items()):
        good_s = f"{good:.2f}" if good is not None else "-"
        bad_s = f"{bad:.2f}" if bad is not None else "-"
        lines.append(f"{rater:<7}{good_s:>17}{bad_s:>21}")
    return "\n".join(lines) + "\n"
