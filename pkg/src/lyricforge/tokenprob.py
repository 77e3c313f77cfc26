"""Detection features computed from per-token log-likelihood streams.

All logarithms are natural. A stream carries one (token, logprob) pair per
scored token plus the index of the first token of each verse, so per-verse
pooling can mirror the document's stanza structure.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping

from .corpus import LyricsDoc
from .errors import ConfigError, EmptyInputError, FormatError, ValidationError

# Feature families emitted by extract_all, with their declared dimensions.
FEATURE_DIMS = {
    "perplexity": 1,
    "max_nll": 1,
    "entropy_max": 1,
    "entropy_max_min": 2,
    "min_k": 1,
}

ENTROPY_POOLINGS = ("max", "max_plus_min")


@dataclass(frozen=True)
class TokenLogProbs:
    """Aligned stream of (token, natural-log probability) pairs for one document."""

    doc_id: str
    model: str
    tokens: tuple[tuple[str, float], ...]
    verse_breaks: tuple[int, ...]

    def __post_init__(self):
        if not self.tokens:
            raise EmptyInputError(f"token stream for {self.doc_id!r} is empty")
        for i, (_, lp) in enumerate(self.tokens):
            if not math.isfinite(lp):
                raise ValidationError(f"{self.doc_id!r}: non-finite logprob at token {i}")
            if lp > 0.0:
                raise ValidationError(f"{self.doc_id!r}: logprob {lp} > 0 at token {i}")
        if not self.verse_breaks or self.verse_breaks[0] != 0:
            raise ValidationError(f"{self.doc_id!r}: verse_breaks must start at 0")
        for prev, cur in zip(self.verse_breaks, self.verse_breaks[1:]):
            if cur <= prev:
                raise ValidationError(f"{self.doc_id!r}: verse_breaks must be strictly increasing")
        if self.verse_breaks[-1] >= len(self.tokens):
            raise ValidationError(f"{self.doc_id!r}: verse break beyond last token")

    def logprobs(self) -> list[float]:
        return [lp for _, lp in self.tokens]

    def verse_slices(self) -> list[tuple[int, int]]:
        """Half-open token index ranges, one per verse."""
        starts = list(self.verse_breaks)
        ends = starts[1:] + [len(self.tokens)]
        return list(zip(starts, ends))


def check_alignment(tlp: TokenLogProbs, doc: LyricsDoc) -> None:
    """Require one verse break per verse of the matching document."""
    if len(tlp.verse_breaks) != len(doc.verses):
        raise ValidationError(
            f"{tlp.doc_id!r}: {len(tlp.verse_breaks)} verse breaks but document has {len(doc.verses)} verses"
        )


@dataclass(frozen=True)
class ProbFeatureConfig:
    """Knobs for the probabilistic feature family."""

    min_k_percent: float = 10.0
    nll_verse_pooling: str = "mean-then-max"
    entropy_pooling: str = "max"

    def __post_init__(self):
        if not 0.0 < self.min_k_percent <= 100.0:
            raise ConfigError(f"min_k_percent must be in (0, 100], got {self.min_k_percent}")
        if self.nll_verse_pooling != "mean-then-max":
            raise ConfigError(f"unsupported nll_verse_pooling {self.nll_verse_pooling!r}")
        if self.entropy_pooling not in ENTROPY_POOLINGS:
            raise ConfigError(f"entropy_pooling must be one of {ENTROPY_POOLINGS}")


@dataclass(frozen=True)
class FeatureVector:
    """A named fixed-dimension numeric vector for one document."""

    doc_id: str
    name: str
    values: tuple[float, ...]

    def __post_init__(self):
        if not self.values:
            raise ValidationError(f"feature {self.name!r} for {self.doc_id!r} has no values")
        if any(not math.isfinite(v) for v in self.values):
            raise ValidationError(f"feature {self.name!r} for {self.doc_id!r} has non-finite values")

    @property
    def dim(self) -> int:
        return len(self.values)


def perplexity(tlp: TokenLogProbs) -> float:
    """exp of the mean negative log-likelihood over the whole stream (>= 1)."""
    lps = tlp.logprobs()
    return math.exp(-sum(lps) / len(lps))


def max_neg_log_likelihood(tlp: TokenLogProbs) -> float:
    """Mean token NLL per verse, pooled with max across verses."""
    means = []
    for start, end in tlp.verse_slices():
        chunk = [-lp for _, lp in tlp.tokens[start:end]]
        means.append(sum(chunk) / len(chunk))
    return max(means)


def _verse_entropies(tlp: TokenLogProbs) -> list[float]:
    # Observed-token entropy proxy: mean of -p*ln(p) with p = exp(logprob).
    out = []
    for start, end in tlp.verse_slices():
        total = 0.0
        for _, lp in tlp.tokens[start:end]:
            total += -math.exp(lp) * lp
        out.append(total / (end - start))
    return out


def shannon_entropy(tlp: TokenLogProbs, pooling: str = "max") -> float | tuple[float, float]:
    """Per-verse entropy proxy pooled across verses.

    pooling="max" returns the highest verse entropy (1-D); "max_plus_min"
    returns (highest, lowest) as a 2-D feature.
    """
    if pooling not in ENTROPY_POOLINGS:
        raise ConfigError(f"pooling must be one of {ENTROPY_POOLINGS}, got {pooling!r}")
    ent = _verse_entropies(tlp)
    if pooling == "max":
        return max(ent)
    return max(ent), min(ent)


def min_k_prob(tlp: TokenLogProbs, k_percent: float) -> float:
    """Mean NLL of the k% least-probable tokens of the whole stream.

    Selects n = max(1, floor(k% * T)) tokens with the smallest logprobs,
    ignoring verse boundaries.
    """
    if not 0.0 < k_percent <= 100.0:
        raise ConfigError(f"k_percent must be in (0, 100], got {k_percent}")
    lps = sorted(tlp.logprobs())
    n = max(1, math.floor(k_percent / 100.0 * len(lps)))
    return -sum(lps[:n]) / n


def extract_all(tlp: TokenLogProbs, cfg: ProbFeatureConfig = ProbFeatureConfig()) -> list[FeatureVector]:
    """Emit the five probabilistic features for one stream."""
    ent_max, ent_min = shannon_entropy(tlp, "max_plus_min")
    return [
        FeatureVector(tlp.doc_id, "perplexity", (perplexity(tlp),)),
        FeatureVector(tlp.doc_id, "max_nll", (max_neg_log_likelihood(tlp),)),
        FeatureVector(tlp.doc_id, "entropy_max", (ent_max,)),
        FeatureVector(tlp.doc_id, "entropy_max_min", (ent_max, ent_min)),
        FeatureVector(tlp.doc_id, "min_k", (min_k_prob(tlp, cfg.min_k_percent),)),
    ]


# ---------------------------------------------------------------------------
# JSONL interchange


def _parse_logprob_record(obj: object, *, path=None, line: int | None = None) -> TokenLogProbs:
    def fail(message: str):
        raise FormatError(message, path=path, line=line)

    if not isinstance(obj, dict):
        fail("record is not a JSON object")
    expected = {"doc_id", "model", "tokens", "verse_breaks"}
    if set(obj) != expected:
        fail(f"fields must be exactly {sorted(expected)}")
    if not isinstance(obj["doc_id"], str) or not isinstance(obj["model"], str):
        fail("'doc_id' and 'model' must be strings")
    tokens = obj["tokens"]
    if not isinstance(tokens, list):
        fail("'tokens' must be an array")
    pairs = []
    for entry in tokens:
        if (
            not isinstance(entry, list)
            or len(entry) != 2
            or not isinstance(entry[0], str)
            or not isinstance(entry[1], (int, float))
            or isinstance(entry[1], bool)
        ):
            fail("each token must be a [text, logprob] pair")
        pairs.append((entry[0], float(entry[1])))
    breaks = obj["verse_breaks"]
    if not isinstance(breaks, list) or not all(isinstance(b, int) and not isinstance(b, bool) for b in breaks):
        fail("'verse_breaks' must be an array of integers")
    try:
        return TokenLogProbs(obj["doc_id"], obj["model"], tuple(pairs), tuple(breaks))
    except ValidationError as exc:
        fail(str(exc))


def read_logprobs(path) -> dict[str, TokenLogProbs]:
    """Load a TokenLogProbs JSONL file keyed by doc id."""
    from .corpus import iter_jsonl

    out: dict[str, TokenLogProbs] = {}
    for line_no, obj in iter_jsonl(path):
        tlp = _parse_logprob_record(obj, path=path, line=line_no)
        if tlp.doc_id in out:
            raise FormatError(f"duplicate doc_id {tlp.doc_id!r}", path=path, line=line_no)
        out[tlp.doc_id] = tlp
    return out


def write_logprobs(streams: Iterable[TokenLogProbs], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for tlp in streams:
            record = {
                "doc_id": tlp.doc_id,
                "model": tlp.model,
                "tokens": [[text, lp] for text, lp in tlp.tokens],
                "verse_breaks": list(tlp.verse_breaks),
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def read_features(path) -> list[FeatureVector]:
    from .corpus import iter_jsonl

    out = []
    seen = set()
    for line_no, obj in iter_jsonl(path):
        if not isinstance(obj, dict) or set(obj) != {"doc_id", "feature", "values"}:
            raise FormatError("fields must be exactly ['doc_id', 'feature', 'values']", path=path, line=line_no)
        if not isinstance(obj["values"], list):
            raise FormatError("'values' must be an array of numbers", path=path, line=line_no)
        try:
            fv = FeatureVector(obj["doc_id"], obj["feature"], tuple(float(v) for v in obj["values"]))
        except (TypeError, ValueError, ValidationError) as exc:
            raise FormatError(str(exc), path=path, line=line_no) from exc
        key = (fv.doc_id, fv.name)
        if key in seen:
            raise FormatError(f"duplicate feature {fv.name!r} for doc {fv.doc_id!r}", path=path, line=line_no)
        seen.add(key)
        out.append(fv)
    return out


def write_features(features: Iterable[FeatureVector], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for fv in features:
            record = {"doc_id": fv.doc_id, "feature": fv.name, "values": list(fv.values)}
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def feature_table(features: Iterable[FeatureVector], name: str) -> dict[str, tuple[float, ...]]:
    """Collect one named feature across documents as doc_id -> vector."""
    table: dict[str, tuple[float, ...]] = {}
    dim = None
    for fv in features:
        if fv.name != name:
            continue
        if dim is None:
            dim = fv.dim
        elif fv.dim != dim:
            raise ValidationError(f"feature {name!r}: mixed dimensions {dim} and {fv.dim}")
        table[fv.doc_id] = fv.values
    return table
