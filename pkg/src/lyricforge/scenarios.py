"""Evaluation scenarios over a labeled corpus and precomputed feature vectors.

A deterministic per-cell split reserves up to N documents per
(language, genre, class) for the vector space; everything else is evaluated.
Each scenario builds one or more spaces from subsets of the reserved pool and
classifies the full test set, reporting per-language (or per-slice) recall.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .corpus import HUMAN, SYNTHETIC, LyricsDoc
from .detector import KnnConfig, PointMeta, build_space, classify
from .errors import ConfigError, ValidationError
from .evaluation import auroc as _auroc

SCENARIOS = ("baseline", "scalability", "cross_lingual", "robustness", "genre_novelty", "billboard")

# Cumulative language order for the robustness scenario; also the column
# order used for report tables when applicable.
DEFAULT_LANGUAGE_ORDER = ("en", "de", "tr", "fr", "pt", "es", "it", "ar", "ja")

DEFAULT_K_SWEEP = (1, 3, 5, 10, 20)


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    feature: str
    knn: KnnConfig = KnnConfig()
    seed: int = 42
    train_per_cell: int = 5
    language_order: tuple[str, ...] | None = None
    sizes: tuple[int, ...] | None = None
    space_language: str | None = None
    holdout_artists: tuple[str, ...] = ()

    def __post_init__(self):
        if self.name not in SCENARIOS:
            raise ConfigError(f"scenario must be one of {SCENARIOS}, got {self.name!r}")
        if self.train_per_cell < 1:
            raise ConfigError("train_per_cell must be >= 1")
        if self.sizes is not None and any(m < 1 for m in self.sizes):
            raise ConfigError("scalability sizes must be >= 1")

    def snapshot(self) -> dict:
        return {
            "scenario": self.name,
            "feature": self.feature,
            "knn": {"k": self.knn.k, "p": self.knn.p, "standardize": self.knn.standardize},
            "seed": self.seed,
            "train_per_cell": self.train_per_cell,
            "language_order": list(self.language_order) if self.language_order else None,
            "sizes": list(self.sizes) if self.sizes else None,
            "space_language": self.space_language,
            "holdout_artists": list(self.holdout_artists),
        }


@dataclass(frozen=True)
class Split:
    train_ids: tuple[str, ...]
    test_ids: tuple[str, ...]
    cell_order: dict[tuple[str, str, str], tuple[str, ...]]
    warnings: tuple[str, ...]


def split_corpus(
    docs: Sequence[LyricsDoc],
    per_cell: int,
    seed: int,
    holdout_artists: Sequence[str] = (),
) -> Split:
    """Reserve up to `per_cell` docs per (language, genre, class) for the space.

    The per-cell order is a seeded shuffle, so taking the first m documents of
    a cell gives nested subsets: m = per_cell reproduces the full reservation.
    Documents by holdout artists never enter the reserved pool.
    """
    holdout = set(holdout_artists)
    cells: dict[tuple[str, str, str], list[str]] = {}
    test_ids: list[str] = []
    for doc in sorted(docs, key=lambda d: d.id):
        if doc.artist in holdout:
            test_ids.append(doc.id)
            continue
        cells.setdefault((doc.language, doc.genre, doc.source_label), []).append(doc.id)
    train_ids: list[str] = []
    cell_order: dict[tuple[str, str, str], tuple[str, ...]] = {}
    warnings: list[str] = []
    for key in sorted(cells):
        ids = list(cells[key])
        rng = random.Random(f"{seed}|{key[0]}|{key[1]}|{key[2]}")
        rng.shuffle(ids)
        reserved = ids[:per_cell]
        if len(reserved) < per_cell:
            warnings.append(f"cell {key}: only {len(reserved)} train docs (wanted {per_cell})")
        cell_order[key] = tuple(reserved)
        train_ids.extend(reserved)
        test_ids.extend(ids[per_cell:])
    return Split(
        train_ids=tuple(sorted(train_ids)),
        test_ids=tuple(sorted(test_ids)),
        cell_order=cell_order,
        warnings=tuple(warnings),
    )


@dataclass(frozen=True)
class SliceMetrics:
    n_human: int
    n_synthetic: int
    recall_human: float | None
    recall_synthetic: float | None
    macro_recall: float | None
    micro_recall: float | None
    auroc: float | None

    def headline(self) -> float | None:
        """Macro recall when both classes occur, else the present class's recall."""
        if self.macro_recall is not None:
            return self.macro_recall
        if self.n_synthetic and not self.n_human:
            return self.recall_synthetic
        if self.n_human and not self.n_synthetic:
            return self.recall_human
        return None


def compute_slice(preds: Sequence[str], truths: Sequence[str], scores: Sequence[float]) -> SliceMetrics:
    n_h = sum(1 for t in truths if t == HUMAN)
    n_s = sum(1 for t in truths if t == SYNTHETIC)
    correct_h = sum(1 for p, t in zip(preds, truths) if t == HUMAN and p == t)
    correct_s = sum(1 for p, t in zip(preds, truths) if t == SYNTHETIC and p == t)
    recall_h = correct_h / n_h if n_h else None
    recall_s = correct_s / n_s if n_s else None
    macro = (recall_h + recall_s) / 2.0 if n_h and n_s else None
    micro = (correct_h + correct_s) / len(truths) if truths else None
    area = _auroc(scores, truths) if n_h and n_s else None
    return SliceMetrics(n_h, n_s, recall_h, recall_s, macro, micro, area)


@dataclass(frozen=True)
class ReportSlice:
    key: str
    metrics: SliceMetrics
    unseen: bool | None = None


@dataclass(frozen=True)
class ReportRow:
    setup: str
    slices: tuple[ReportSlice, ...]
    avg_macro: float | None
    overall: SliceMetrics
    n_space: int
    skipped: bool = False
    note: str = ""


@dataclass(frozen=True)
class EvalReport:
    scenario: str
    languages: tuple[str, ...]
    rows: tuple[ReportRow, ...]
    warnings: tuple[str, ...]
    config: dict = field(hash=False)


def ordered_languages(present: Iterable[str], override: Sequence[str] | None = None) -> tuple[str, ...]:
    present = set(present)
    if override:
        missing = [lang for lang in override if lang not in present]
        if missing:
            raise ConfigError(f"language order names absent languages: {missing}")
        rest = sorted(present - set(override))
        return tuple(override) + tuple(rest)
    head = [lang for lang in DEFAULT_LANGUAGE_ORDER if lang in present]
    tail = sorted(present - set(DEFAULT_LANGUAGE_ORDER))
    return tuple(head) + tuple(tail)


def _require_vectors(doc_ids: Iterable[str], vectors: Mapping[str, Sequence[float]]) -> None:
    for doc_id in doc_ids:
        if doc_id not in vectors:
            raise ValidationError(f"no feature vector for document {doc_id!r}")


def _classify_all(space, test_docs, vectors, knn: KnnConfig):
    preds, scores = {}, {}
    for doc in test_docs:
        det = classify(space, vectors[doc.id], knn, query_id=doc.id)
        preds[doc.id] = det.predicted_label
        scores[doc.id] = det.score_synthetic
    return preds, scores


def _slice_rows(test_docs, preds, scores, key_of, unseen_of=None) -> tuple[ReportSlice, ...]:
    grouped: dict[str, list[LyricsDoc]] = {}
    for doc in test_docs:
        grouped.setdefault(key_of(doc), []).append(doc)
    slices = []
    for key in sorted(grouped):
        docs = grouped[key]
        metrics = compute_slice(
            [preds[d.id] for d in docs],
            [d.source_label for d in docs],
            [scores[d.id] for d in docs],
        )
        unseen = unseen_of(docs[0]) if unseen_of else None
        slices.append(ReportSlice(key=key, metrics=metrics, unseen=unseen))
    return tuple(slices)


def _make_row(setup, space_ids, docs_by_id, vectors, test_docs, cfg, key_of, unseen_of=None):
    labels = {docs_by_id[i].source_label for i in space_ids}
    if len(space_ids) == 0 or len(labels) < 2:
        return None, f"setup {setup!r}: space needs both classes, skipped"
    if cfg.knn.k > len(space_ids):
        return None, f"setup {setup!r}: k={cfg.knn.k} exceeds space size {len(space_ids)}, skipped"
    space = build_space(
        cfg.feature,
        {i: vectors[i] for i in space_ids},
        {i: PointMeta.from_doc(docs_by_id[i]) for i in space_ids},
        standardize=cfg.knn.standardize,
    )
    preds, scores = _classify_all(space, test_docs, vectors, cfg.knn)
    slices = _slice_rows(test_docs, preds, scores, key_of, unseen_of)
    macros = [s.metrics.macro_recall for s in slices if s.metrics.macro_recall is not None]
    overall = compute_slice(
        [preds[d.id] for d in test_docs],
        [d.source_label for d in test_docs],
        [scores[d.id] for d in test_docs],
    )
    row = ReportRow(
        setup=setup,
        slices=slices,
        avg_macro=sum(macros) / len(macros) if macros else None,
        overall=overall,
        n_space=len(space_ids),
    )
    return row, None


def run_scenario(
    docs: Sequence[LyricsDoc],
    vectors: Mapping[str, Sequence[float]],
    cfg: ScenarioConfig,
) -> EvalReport:
    """Run one scenario end to end and assemble its report."""
    docs = sorted(docs, key=lambda d: d.id)
    docs_by_id = {d.id: d for d in docs}
    split = split_corpus(docs, cfg.train_per_cell, cfg.seed, cfg.holdout_artists)
    if not split.test_ids:
        raise ValidationError("split left no test documents")
    _require_vectors(split.train_ids, vectors)
    _require_vectors(split.test_ids, vectors)
    test_docs = [docs_by_id[i] for i in split.test_ids]
    languages = ordered_languages({d.language for d in docs}, cfg.language_order)
    warnings = list(split.warnings)

    by_language = lambda d: d.language
    train_ids = list(split.train_ids)

    setups: list[tuple[str, list[str]]] = []
    key_of = by_language
    unseen_of = None
    if cfg.name == "baseline":
        setups = [("All", train_ids)]
    elif cfg.name == "scalability":
        sizes = cfg.sizes or tuple(range(1, cfg.train_per_cell + 1))
        for m in sizes:
            ids = [i for order in split.cell_order.values() for i in order[:m]]
            setups.append((str(m), sorted(ids)))
    elif cfg.name == "cross_lingual":
        for lang in languages:
            setups.append((lang, [i for i in train_ids if docs_by_id[i].language == lang]))
    elif cfg.name == "robustness":
        for idx in range(len(languages)):
            allowed = set(languages[: idx + 1])
            label = languages[0] if idx == 0 else f"+ {languages[idx]}"
            setups.append((label, [i for i in train_ids if docs_by_id[i].language in allowed]))
    elif cfg.name == "genre_novelty":
        source = cfg.space_language or languages[0]
        ids = [i for i in train_ids if docs_by_id[i].language == source]
        if not ids:
            raise ValidationError(f"no train documents for space language {source!r}")
        space_genres = {docs_by_id[i].genre for i in ids}
        setups = [(source, ids)]
        key_of = lambda d: f"{d.language}/{d.genre}"
        unseen_of = lambda d: d.genre not in space_genres
    elif cfg.name == "billboard":
        setups = [("All", train_ids)]
        space_artists = {docs_by_id[i].artist for i in train_ids}
        key_of = lambda d: f"{d.generator or HUMAN}/{'seen' if d.artist in space_artists else 'unseen'}"

    rows = []
    for setup, space_ids in setups:
        row, warning = _make_row(setup, space_ids, docs_by_id, vectors, test_docs, cfg, key_of, unseen_of)
        if row is None:
            warnings.append(warning)
            rows.append(
                ReportRow(
                    setup=setup,
                    slices=(),
                    avg_macro=None,
                    overall=SliceMetrics(0, 0, None, None, None, None, None),
                    n_space=len(space_ids),
                    skipped=True,
                    note=warning,
                )
            )
        else:
            rows.append(row)
    return EvalReport(
        scenario=cfg.name,
        languages=languages,
        rows=tuple(rows),
        warnings=tuple(warnings),
        config=cfg.snapshot(),
    )


# ---------------------------------------------------------------------------
# k sweep (detector ablation table: rows = languages, columns = k values)


@dataclass(frozen=True)
class KSweepTable:
    ks: tuple[int, ...]
    languages: tuple[str, ...]
    cells: dict[str, tuple[float | None, ...]]
    avg: tuple[float | None, ...]
    config: dict = field(hash=False)

    def to_json_obj(self) -> dict:
        return {
            "ks": list(self.ks),
            "languages": list(self.languages),
            "rows": [
                {"language": lang, "macro_recall": list(self.cells[lang])} for lang in self.languages
            ],
            "avg": list(self.avg),
            "config": self.config,
        }


def k_sweep(
    docs: Sequence[LyricsDoc],
    vectors: Mapping[str, Sequence[float]],
    cfg: ScenarioConfig,
    ks: Sequence[int] = DEFAULT_K_SWEEP,
) -> KSweepTable:
    """Baseline-space macro recall per language while varying k."""
    if not ks or any(k < 1 for k in ks):
        raise ConfigError("k values must be >= 1")
    per_k_reports = []
    for k in ks:
        knn = KnnConfig(k=k, p=cfg.knn.p, standardize=cfg.knn.standardize)
        run_cfg = ScenarioConfig(
            name="baseline",
            feature=cfg.feature,
            knn=knn,
            seed=cfg.seed,
            train_per_cell=cfg.train_per_cell,
            language_order=cfg.language_order,
            holdout_artists=cfg.holdout_artists,
        )
        per_k_reports.append(run_scenario(docs, vectors, run_cfg))
    languages = per_k_reports[0].languages
    cells: dict[str, list[float | None]] = {lang: [] for lang in languages}
    for report in per_k_reports:
        row = report.rows[0]
        by_key = {s.key: s.metrics for s in row.slices}
        for lang in languages:
            metrics = by_key.get(lang)
            cells[lang].append(metrics.macro_recall if metrics else None)
    avg = []
    for idx in range(len(ks)):
        defined = [cells[lang][idx] for lang in languages if cells[lang][idx] is not None]
        avg.append(sum(defined) / len(defined) if defined else None)
    snapshot = dict(per_k_reports[0].config)
    snapshot["ks"] = list(ks)
    return KSweepTable(
        ks=tuple(ks),
        languages=languages,
        cells={lang: tuple(vals) for lang, vals in cells.items()},
        avg=tuple(avg),
        config=snapshot,
    )


# ---------------------------------------------------------------------------
# Rendering


def _fmt(value: float | None) -> str:
    return f"{100.0 * value:.1f}" if value is not None else "--"


def _metrics_obj(m: SliceMetrics) -> dict:
    return {
        "n_human": m.n_human,
        "n_synthetic": m.n_synthetic,
        "recall_human": m.recall_human,
        "recall_synthetic": m.recall_synthetic,
        "macro_recall": m.macro_recall,
        "micro_recall": m.micro_recall,
        "auroc": m.auroc,
    }


def report_to_json_obj(report: EvalReport) -> dict:
    return {
        "scenario": report.scenario,
        "languages": list(report.languages),
        "config": report.config,
        "warnings": list(report.warnings),
        "rows": [
            {
                "setup": row.setup,
                "n_space": row.n_space,
                "skipped": row.skipped,
                "note": row.note,
                "avg_macro": row.avg_macro,
                "overall": _metrics_obj(row.overall),
                "slices": [
                    {"key": s.key, "unseen": s.unseen, "metrics": _metrics_obj(s.metrics)}
                    for s in row.slices
                ],
            }
            for row in report.rows
        ],
    }


def report_to_json(report: EvalReport) -> str:
    return json.dumps(report_to_json_obj(report), ensure_ascii=False, sort_keys=True, indent=2) + "\n"


def render_report_text(report: EvalReport) -> str:
    lines = [f"# scenario: {report.scenario}", f"# config: {json.dumps(report.config, sort_keys=True)}"]
    for warning in report.warnings:
        lines.append(f"# warning: {warning}")
    if report.scenario == "genre_novelty" and report.rows and report.rows[0].slices:
        lines.append(f"{'Lang/Genre':<24}{'Score':>8}  Unseen")
        for s in report.rows[0].slices:
            marker = "*" if s.unseen else ""
            lines.append(f"{s.key:<24}{_fmt(s.metrics.headline()):>8}  {marker}")
        lines.append(f"{'Avg.':<24}{_fmt(report.rows[0].avg_macro):>8}")
        return "\n".join(lines) + "\n"

    if report.scenario == "billboard":
        keys = sorted({s.key for row in report.rows for s in row.slices})
    else:
        keys = list(report.languages)
    header = f"{'Setup':<12}" + "".join(f"{k:>14}" for k in keys) + f"{'Avg.':>10}{'Micro':>10}"
    lines.append(header)
    for row in report.rows:
        if row.skipped:
            lines.append(f"{row.setup:<12}  [skipped: {row.note}]")
            continue
        by_key = {s.key: s.metrics for s in row.slices}
        cells = "".join(f"{_fmt(by_key[k].headline()) if k in by_key else '--':>14}" for k in keys)
        lines.append(f"{row.setup:<12}{cells}{_fmt(row.avg_macro):>10}{_fmt(row.overall.micro_recall):>10}")
    lines.append("# Avg. = unweighted mean of per-slice macro recall; Micro = by-count recall over both classes")
    return "\n".join(lines) + "\n"


def render_k_sweep_text(table: KSweepTable) -> str:
    lines = [f"# config: {json.dumps(table.config, sort_keys=True)}"]
    lines.append(f"{'Langs':<8}" + "".join(f"{'k=' + str(k):>10}" for k in table.ks))
    for lang in table.languages:
        cells = "".join(f"{_fmt(v):>10}" for v in table.cells[lang])
        lines.append(f"{lang:<8}{cells}")
    lines.append(f"{'Avg.':<8}" + "".join(f"{_fmt(v):>10}" for v in table.avg))
    return "\n".join(lines) + "\n"
