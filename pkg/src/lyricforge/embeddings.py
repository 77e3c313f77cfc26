"""Ingestion of externally computed document embeddings, plus vector utilities.

Embeddings are precomputed artifacts (frozen encoders run elsewhere); this
module only validates, loads, and compares them.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable

from .corpus import iter_jsonl
from .errors import FormatError, ValidationError


@dataclass(frozen=True)
class DocEmbedding:
    doc_id: str
    model: str
    vector: tuple[float, ...]

    def __post_init__(self):
        if not self.vector:
            raise ValidationError(f"embedding for {self.doc_id!r} is empty")
        if any(not math.isfinite(v) for v in self.vector):
            raise ValidationError(f"embedding for {self.doc_id!r} has non-finite entries")

    @property
    def dim(self) -> int:
        return len(self.vector)


def load_embeddings(path) -> dict[str, DocEmbedding]:
    """Load an embedding JSONL file; one (model, dim) pair per file, unique ids."""
    out: dict[str, DocEmbedding] = {}
    model_dim: tuple[str, int] | None = None
    for line_no, obj in iter_jsonl(path):
        if not isinstance(obj, dict) or set(obj) != {"doc_id", "model", "dim", "vector"}:
            raise FormatError(
                "fields must be exactly ['doc_id', 'model', 'dim', 'vector']", path=path, line=line_no
            )
        if not isinstance(obj["doc_id"], str) or not isinstance(obj["model"], str):
            raise FormatError("'doc_id' and 'model' must be strings", path=path, line=line_no)
        if not isinstance(obj["dim"], int) or isinstance(obj["dim"], bool) or obj["dim"] <= 0:
            raise FormatError("'dim' must be a positive integer", path=path, line=line_no)
        vector = obj["vector"]
        if not isinstance(vector, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in vector
        ):
            raise FormatError("'vector' must be an array of numbers", path=path, line=line_no)
        if len(vector) != obj["dim"]:
            raise FormatError(
                f"vector length {len(vector)} does not match dim {obj['dim']}", path=path, line=line_no
            )
        try:
            emb = DocEmbedding(obj["doc_id"], obj["model"], tuple(float(v) for v in vector))
        except ValidationError as exc:
            raise FormatError(str(exc), path=path, line=line_no) from exc
        if model_dim is None:
            model_dim = (emb.model, emb.dim)
        elif (emb.model, emb.dim) != model_dim:
            raise FormatError(
                f"mixed (model, dim): {(emb.model, emb.dim)} vs {model_dim}", path=path, line=line_no
            )
        if emb.doc_id in out:
            raise FormatError(f"duplicate doc_id {emb.doc_id!r}", path=path, line=line_no)
        out[emb.doc_id] = emb
    return out


def write_embeddings(embeddings: Iterable[DocEmbedding], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for emb in embeddings:
            record = {"doc_id": emb.doc_id, "model": emb.model, "dim": emb.dim, "vector": list(emb.vector)}
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def cosine(a: DocEmbedding, b: DocEmbedding) -> float:
    """Cosine similarity in [-1, 1]; rejects zero vectors and dim mismatches."""
    if a.dim != b.dim:
        raise ValidationError(f"dimension mismatch: {a.dim} vs {b.dim}")
    dot = sum(x * y for x, y in zip(a.vector, b.vector))
    norm_a = math.sqrt(sum(x * x for x in a.vector))
    norm_b = math.sqrt(sum(y * y for y in b.vector))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ValidationError("cosine undefined for zero-norm vectors")
    return max(-1.0, min(1.0, dot / (norm_a * norm_b)))
