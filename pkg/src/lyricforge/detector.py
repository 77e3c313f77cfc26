"""k-NN detection over labeled feature-vector spaces with Minkowski distance.

Spaces are small (hundreds of points), so neighbor search is exhaustive with
fully deterministic tie-breaking: distance ties fall to the lexicographically
smallest point id, label ties (even k) to the single nearest neighbor.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import HUMAN, LABELS, SYNTHETIC, LyricsDoc
from .errors import ConfigError, FormatError, ValidationError

SPACE_FORMAT = "lyricforge-space"
SPACE_VERSION = 1


@dataclass(frozen=True)
class PointMeta:
    """Metadata kept per point for scenario slicing."""

    label: str
    language: str
    genre: str
    artist: str
    generator: str | None = None

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValidationError(f"label must be one of {LABELS}, got {self.label!r}")

    @classmethod
    def from_doc(cls, doc: LyricsDoc) -> "PointMeta":
        return cls(doc.source_label, doc.language, doc.genre, doc.artist, doc.generator)


@dataclass(frozen=True)
class SpacePoint:
    id: str
    vector: tuple[float, ...]
    meta: PointMeta

    @property
    def label(self) -> str:
        return self.meta.label


@dataclass(frozen=True)
class KnnConfig:
    """k, Minkowski order p, and the standardization switch (None = auto)."""

    k: int = 3
    p: float = 2.0
    standardize: bool | None = None

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.p < 1:
            raise ConfigError(f"Minkowski order p must be >= 1, got {self.p}")


@dataclass
class VectorSpace:
    """Labeled reference set queried by k-NN.

    When `scaling` is present, the stored point vectors are already
    standardized and queries are standardized with the same (mean, std).
    """

    feature_name: str
    dim: int
    points: tuple[SpacePoint, ...]
    scaling: tuple[tuple[float, ...], tuple[float, ...]] | None = None
    _matrix: np.ndarray | None = field(default=None, repr=False, compare=False)

    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            self._matrix = np.array([p.vector for p in self.points], dtype=np.float64)
        return self._matrix

    def labels(self) -> set[str]:
        return {p.label for p in self.points}


def build_space(
    feature_name: str,
    vectors: Mapping[str, Sequence[float]],
    meta: Mapping[str, PointMeta],
    standardize: bool | None = None,
) -> VectorSpace:
    """Assemble a space from per-document vectors and metadata.

    standardize=None picks the default: off for 1-D features, on otherwise.
    Points are stored sorted by id so serialized spaces are deterministic.
    """
    if not vectors:
        raise ValidationError("cannot build a space from zero points")
    ids = sorted(vectors)
    dim = len(vectors[ids[0]])
    if dim == 0:
        raise ValidationError("vectors must have at least one dimension")
    for doc_id in ids:
        if len(vectors[doc_id]) != dim:
            raise ValidationError(f"dimension mismatch for {doc_id!r}: {len(vectors[doc_id])} != {dim}")
        if doc_id not in meta:
            raise ValidationError(f"no metadata for document {doc_id!r}")
    labels = {meta[doc_id].label for doc_id in ids}
    if len(labels) < 2:
        raise ValidationError(f"space must contain both classes, got only {sorted(labels)}")

    if standardize is None:
        standardize = dim > 1
    raw = np.array([vectors[doc_id] for doc_id in ids], dtype=np.float64)
    scaling = None
    if standardize:
        mean = raw.mean(axis=0)
        std = raw.std(axis=0)
        if np.any(std == 0.0):
            degenerate = int(np.flatnonzero(std == 0.0)[0])
            raise ValidationError(f"cannot standardize: dimension {degenerate} is constant (std=0)")
        raw = (raw - mean) / std
        scaling = (tuple(float(v) for v in mean), tuple(float(v) for v in std))

    points = tuple(
        SpacePoint(doc_id, tuple(float(v) for v in raw[i]), meta[doc_id]) for i, doc_id in enumerate(ids)
    )
    return VectorSpace(feature_name=feature_name, dim=dim, points=points, scaling=scaling)


@dataclass(frozen=True)
class Detection:
    doc_id: str
    predicted_label: str
    score_synthetic: float
    neighbor_ids: tuple[tuple[str, float], ...]


def minkowski(x: Sequence[float], y: Sequence[float], p: float) -> float:
    diff = np.abs(np.asarray(x, dtype=np.float64) - np.asarray(y, dtype=np.float64))
    return float(np.sum(diff**p) ** (1.0 / p))


def classify(
    space: VectorSpace,
    query_vector: Sequence[float],
    cfg: KnnConfig = KnnConfig(),
    query_id: str = "",
) -> Detection:
    """Assign the modal label of the k nearest points to the query."""
    if len(query_vector) != space.dim:
        raise ValidationError(f"query has dim {len(query_vector)}, space has dim {space.dim}")
    if cfg.k > len(space.points):
        raise ValidationError(f"k={cfg.k} exceeds space size {len(space.points)}")
    q = np.asarray(query_vector, dtype=np.float64)
    if space.scaling is not None:
        mean, std = space.scaling
        q = (q - np.asarray(mean)) / np.asarray(std)
    diff = np.abs(space.matrix() - q)
    dists = np.sum(diff**cfg.p, axis=1) ** (1.0 / cfg.p)
    order = sorted(range(len(space.points)), key=lambda i: (dists[i], space.points[i].id))
    nearest = order[: cfg.k]
    synthetic_votes = sum(1 for i in nearest if space.points[i].label == SYNTHETIC)
    if synthetic_votes * 2 > cfg.k:
        label = SYNTHETIC
    elif synthetic_votes * 2 < cfg.k:
        label = HUMAN
    else:
        label = space.points[nearest[0]].label
    return Detection(
        doc_id=query_id,
        predicted_label=label,
        score_synthetic=synthetic_votes / cfg.k,
        neighbor_ids=tuple((space.points[i].id, float(dists[i])) for i in nearest),
    )


def majority_vote(votes: Mapping[str, str], priority: Sequence[str]) -> str:
    """Modal label across detectors; exact ties fall to the highest-priority vote."""
    if not votes:
        raise ValidationError("majority_vote needs at least one detector vote")
    counts: dict[str, int] = {}
    for label in votes.values():
        counts[label] = counts.get(label, 0) + 1
    best = max(counts.values())
    winners = [label for label, c in counts.items() if c == best]
    if len(winners) == 1:
        return winners[0]
    for name in priority:
        if name in votes and votes[name] in winners:
            return votes[name]
    raise ValidationError("tied vote and no priority detector to break it")


# ---------------------------------------------------------------------------
# Space file: version line, JSON header (feature_name, dim, scaling), then one
# tab-separated line per point with JSON-encoded string fields and the
# (possibly standardized) coordinates as decimal doubles.


def write_space(space: VectorSpace, path) -> None:
    header = {
        "feature_name": space.feature_name,
        "dim": space.dim,
        "scaling": None
        if space.scaling is None
        else {"mean": list(space.scaling[0]), "std": list(space.scaling[1])},
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{SPACE_FORMAT} {SPACE_VERSION}\n")
        fh.write(json.dumps(header, ensure_ascii=True, sort_keys=True) + "\n")
        for point in space.points:
            m = point.meta
            cols = [json.dumps(v, ensure_ascii=True) for v in (point.id, m.label, m.language, m.genre, m.artist, m.generator)]
            cols.extend(repr(v) for v in point.vector)
            fh.write("\t".join(cols) + "\n")


def read_space(path) -> VectorSpace:
    with open(path, encoding="utf-8") as fh:
        version_line = fh.readline().rstrip("\n")
        if version_line != f"{SPACE_FORMAT} {SPACE_VERSION}":
            raise FormatError("not a space file (bad version line)", path=path, line=1)
        try:
            header = json.loads(fh.readline())
            feature_name = header["feature_name"]
            dim = int(header["dim"])
            scaling = header["scaling"]
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed space header: {exc}", path=path, line=2) from exc
        if scaling is not None:
            scaling = (tuple(float(v) for v in scaling["mean"]), tuple(float(v) for v in scaling["std"]))
            if len(scaling[0]) != dim or len(scaling[1]) != dim:
                raise FormatError("scaling length does not match dim", path=path, line=2)
        points = []
        for line_no, line in enumerate(fh, start=3):
            line = line.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 6 + dim:
                raise FormatError(f"expected {6 + dim} columns, got {len(cols)}", path=path, line=line_no)
            try:
                doc_id, label, language, genre, artist, generator = (json.loads(c) for c in cols[:6])
                vector = tuple(float(c) for c in cols[6:])
                meta = PointMeta(label, language, genre, artist, generator)
            except (json.JSONDecodeError, ValueError, ValidationError) as exc:
                raise FormatError(f"malformed point: {exc}", path=path, line=line_no) from exc
            points.append(SpacePoint(doc_id, vector, meta))
    if not points:
        raise FormatError("space file has no points", path=path)
    if scaling is not None and any(s <= 0 for s in scaling[1]):
        raise FormatError("scaling std entries must be > 0", path=path, line=2)
    return VectorSpace(feature_name=feature_name, dim=dim, points=tuple(points), scaling=scaling)
