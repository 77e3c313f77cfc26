"""Curation of generated lyrics: normalization, IQR filtering, semantic filtering.

The three stages run in order and only ever shrink the candidate set:
regex-based cleanup of generation artifacts, a per-group interquartile-range
filter on surface statistics against human references, and a semantic
similarity cap per (generator, group) bucket.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Mapping, Sequence

from .corpus import HUMAN, LyricsDoc, compute_stats
from .embeddings import DocEmbedding, cosine
from .errors import ConfigError, EmptyDocumentError, ValidationError

GROUP_KEYS = ("artist", "language_genre")

# Filter order mirrors the curation metric list: sentence length, number of
# verses, verse size, word count.
METRIC_ORDER = ("avg_line_len_words", "num_verses", "avg_verse_size_lines", "word_count")

DEFAULT_CAP = 150

# (open, close) pairs recognized as wrapping quotes.
_QUOTE_PAIRS = (('"', '"'), ("'", "'"), ("“", "”"), ("‘", "’"), ("«", "»"))


@dataclass(frozen=True)
class NormalizationRules:
    strip_line_end_punct: frozenset[str]
    strip_wrapping_quotes: bool
    drop_line_patterns: tuple[str, ...]
    collapse_blank_lines: bool
    version: int = 1

    def __post_init__(self):
        if "'" in self.strip_line_end_punct or "’" in self.strip_line_end_punct:
            raise ConfigError("apostrophes must not be stripped as end punctuation")
        for pattern in self.drop_line_patterns:
            try:
                re.compile(pattern)
            except re.error as exc:
                raise ConfigError(f"bad drop pattern {pattern!r}: {exc}") from exc

    def compiled_patterns(self) -> list[re.Pattern]:
        return [re.compile(p, re.IGNORECASE) for p in self.drop_line_patterns]


def load_rules(path) -> NormalizationRules:
    """Parse the key = value rules config; drop_line_pattern may repeat."""
    values: dict[str, str] = {}
    patterns: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{line_no}: expected 'key = value'")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key == "drop_line_pattern":
                patterns.append(value)
            elif key in ("version", "strip_line_end_punct", "strip_wrapping_quotes", "collapse_blank_lines"):
                if key in values:
                    raise ConfigError(f"{path}:{line_no}: duplicate key {key!r}")
                values[key] = value
            else:
                raise ConfigError(f"{path}:{line_no}: unknown key {key!r}")
    try:
        return NormalizationRules(
            strip_line_end_punct=frozenset(values.get("strip_line_end_punct", ".,;:!?")),
            strip_wrapping_quotes=values.get("strip_wrapping_quotes", "true") == "true",
            drop_line_patterns=tuple(patterns),
            collapse_blank_lines=values.get("collapse_blank_lines", "true") == "true",
            version=int(values.get("version", "1")),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def default_rules() -> NormalizationRules:
    ref = resources.files("lyricforge.data").joinpath("normalization_rules.cfg")
    with resources.as_file(ref) as path:
        return load_rules(path)


def _strip_wrapping_quotes(line: str) -> str:
    for open_q, close_q in _QUOTE_PAIRS:
        if len(line) >= 2 and line.startswith(open_q) and line.endswith(close_q):
            return line[1:-1].strip()
    return line


def _normalize_line(line: str, rules: NormalizationRules, patterns: list[re.Pattern]) -> str | None:
    """Apply the per-line rules to a fixpoint; None means the line is dropped."""
    current = line
    while True:
        if any(p.search(current) for p in patterns):
            return None
        candidate = current
        if rules.strip_wrapping_quotes:
            candidate = _strip_wrapping_quotes(candidate)
        candidate = candidate.rstrip()
        while candidate and candidate[-1] in rules.strip_line_end_punct:
            candidate = candidate[:-1].rstrip()
        if candidate == current:
            return current if current else None
        current = candidate


def normalize(doc: LyricsDoc, rules: NormalizationRules | None = None) -> LyricsDoc:
    """Clean one document; raises EmptyDocumentError if nothing survives."""
    if rules is None:
        rules = default_rules()
    patterns = rules.compiled_patterns()
    out_lines: list[str] = []
    for verse in doc.verses:
        for line in verse.lines:
            kept = _normalize_line(line, rules, patterns)
            if kept is not None:
                out_lines.append(kept)
        out_lines.append("")  # verse separator; canonicalization collapses runs
    text = "\n".join(out_lines)
    try:
        return LyricsDoc.create(
            id=doc.id,
            language=doc.language,
            genre=doc.genre,
            artist=doc.artist,
            source_label=doc.source_label,
            generator=doc.generator,
            text=text,
            seed_ids=doc.seed_ids,
        )
    except EmptyDocumentError:
        raise EmptyDocumentError(f"document {doc.id!r} is empty after normalization") from None


@dataclass(frozen=True)
class Rejection:
    id: str
    stage: str
    reason: str

    def to_record(self) -> dict:
        return {"id": self.id, "stage": self.stage, "reason": self.reason}


def group_value(doc: LyricsDoc, group_key: str):
    if group_key == "artist":
        return doc.artist
    if group_key == "language_genre":
        return (doc.language, doc.genre)
    raise ConfigError(f"group_key must be one of {GROUP_KEYS}, got {group_key!r}")


def _quantile(sorted_values: Sequence[float], q: float) -> float:
    # Linear-interpolation quantile: rank h = (n - 1) * q.
    h = (len(sorted_values) - 1) * q
    lo = int(h)
    hi = min(lo + 1, len(sorted_values) - 1)
    return sorted_values[lo] + (h - lo) * (sorted_values[hi] - sorted_values[lo])


@dataclass(frozen=True)
class IqrBounds:
    group_key: str
    group: object
    bounds: tuple[tuple[str, float, float], ...]  # (metric, q1, q3)

    def __post_init__(self):
        for metric, q1, q3 in self.bounds:
            if q1 > q3:
                raise ValidationError(f"{metric}: q1 {q1} > q3 {q3}")

    def range_for(self, metric: str) -> tuple[float, float]:
        for name, q1, q3 in self.bounds:
            if name == metric:
                return q1, q3
        raise KeyError(metric)


def fit_iqr(human_docs: Iterable[LyricsDoc], group_key: str) -> dict[object, IqrBounds]:
    """Per-group Q1/Q3 of the four surface statistics, from human documents only."""
    groups: dict[object, list[LyricsDoc]] = {}
    for doc in human_docs:
        if doc.source_label != HUMAN:
            raise ValidationError(f"IQR bounds must be fitted on human documents, got {doc.id!r}")
        groups.setdefault(group_value(doc, group_key), []).append(doc)
    if not groups:
        raise ValidationError("no human documents to fit IQR bounds on")
    out: dict[object, IqrBounds] = {}
    for group, docs in groups.items():
        if len(docs) < 4:
            raise ValidationError(f"group {group!r} has only {len(docs)} human docs (need >= 4)")
        stats = [compute_stats(d) for d in docs]
        bounds = []
        for metric in METRIC_ORDER:
            values = sorted(float(getattr(s, metric)) for s in stats)
            bounds.append((metric, _quantile(values, 0.25), _quantile(values, 0.75)))
        out[group] = IqrBounds(group_key=group_key, group=group, bounds=tuple(bounds))
    return out


def iqr_filter(
    candidates: Iterable[LyricsDoc],
    bounds: Mapping[object, IqrBounds],
    group_key: str,
) -> tuple[list[LyricsDoc], list[Rejection]]:
    """Keep candidates whose four metrics all fall inside [q1, q3] (inclusive)."""
    kept: list[LyricsDoc] = []
    rejected: list[Rejection] = []
    for doc in candidates:
        group = group_value(doc, group_key)
        if group not in bounds:
            raise ValidationError(f"no IQR bounds for group {group!r} (doc {doc.id!r})")
        stats = compute_stats(doc)
        reason = None
        for metric in METRIC_ORDER:
            q1, q3 = bounds[group].range_for(metric)
            value = float(getattr(stats, metric))
            if not q1 <= value <= q3:
                reason = metric
                break
        if reason is None:
            kept.append(doc)
        else:
            rejected.append(Rejection(doc.id, "iqr", reason))
    return kept, rejected


def semantic_filter(
    candidates: Iterable[LyricsDoc],
    human_docs: Iterable[LyricsDoc],
    embeddings: Mapping[str, DocEmbedding],
    group_key: str,
    cap: int = DEFAULT_CAP,
    aggregation: str = "mean",
) -> tuple[list[tuple[LyricsDoc, float]], list[Rejection]]:
    """Keep the top-`cap` most human-similar candidates per (generator, group).

    Similarity is the mean (or max) cosine between the candidate's embedding
    and every human embedding of its group. Kept docs are returned with their
    similarity, sorted by similarity descending (ties by id).
    """
    if cap < 1:
        raise ConfigError(f"cap must be >= 1, got {cap}")
    if aggregation not in ("mean", "max"):
        raise ConfigError(f"aggregation must be 'mean' or 'max', got {aggregation!r}")

    def embedding_of(doc: LyricsDoc) -> DocEmbedding:
        emb = embeddings.get(doc.id)
        if emb is None:
            raise ValidationError(f"no embedding for document {doc.id!r}")
        return emb

    humans_by_group: dict[object, list[DocEmbedding]] = {}
    for doc in human_docs:
        humans_by_group.setdefault(group_value(doc, group_key), []).append(embedding_of(doc))

    buckets: dict[tuple, list[tuple[LyricsDoc, float]]] = {}
    for doc in candidates:
        group = group_value(doc, group_key)
        refs = humans_by_group.get(group)
        if not refs:
            raise ValidationError(f"no human documents for group {group!r} (doc {doc.id!r})")
        emb = embedding_of(doc)
        sims = [cosine(emb, ref) for ref in refs]
        similarity = sum(sims) / len(sims) if aggregation == "mean" else max(sims)
        buckets.setdefault((doc.generator, group), []).append((doc, similarity))

    kept: list[tuple[LyricsDoc, float]] = []
    rejected: list[Rejection] = []
    for bucket in buckets.values():
        bucket.sort(key=lambda item: (-item[1], item[0].id))
        kept.extend(bucket[:cap])
        for doc, _ in bucket[cap:]:
            rejected.append(Rejection(doc.id, "semantic", "over_cap"))
    kept.sort(key=lambda item: (-item[1], item[0].id))
    return kept, rejected


def write_rejections(rejections: Iterable[Rejection], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rej in rejections:
            fh.write(json.dumps(rej.to_record(), ensure_ascii=False) + "\n")
