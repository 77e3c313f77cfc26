"""Okapi BM25 index over human lyrics and the seed-regurgitation hit-rate audit.

Tokenization is lowercase word characters (Unicode-aware, no stemming or
stopwords) so the same index works across all corpus languages. IDF uses the
non-negative variant ln((N - df + 0.5) / (df + 0.5) + 1).
"""
from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable

from .corpus import LyricsDoc
from .errors import EmptyInputError, ValidationError

_TOKEN_RE = re.compile(r"\w+")

# Rank ranges audited, as (label, lowest rank, highest rank), matching the
# hit-rate table layout; ranks beyond 50 fall outside every bucket.
BUCKETS = (
    ("1", 1, 1),
    ("2", 2, 2),
    ("3", 3, 3),
    ("3 to 5", 4, 5),
    ("5 to 10", 6, 10),
    ("10 to 20", 11, 20),
    ("20 to 50", 21, 50),
)


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


@dataclass
class Bm25Index:
    ids: tuple[str, ...]
    term_freqs: tuple[Counter, ...]
    doc_lens: tuple[int, ...]
    idf: dict[str, float]
    avgdl: float
    k1: float
    b: float

    def __post_init__(self):
        if self.avgdl <= 0:
            raise ValidationError("average document length must be > 0")

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in set(self.ids)


def build_index(human_docs: Iterable[LyricsDoc], k1: float = 1.2, b: float = 0.75) -> Bm25Index:
    docs = list(human_docs)
    if not docs:
        raise EmptyInputError("cannot index an empty corpus")
    seen = set()
    for doc in docs:
        if doc.id in seen:
            raise ValidationError(f"duplicate document id {doc.id!r}")
        seen.add(doc.id)
    token_lists = [tokenize(d.text) for d in docs]
    doc_lens = [len(t) for t in token_lists]
    if sum(doc_lens) == 0:
        raise ValidationError("corpus has no tokens")
    term_freqs = [Counter(t) for t in token_lists]
    df: Counter = Counter()
    for tf in term_freqs:
        df.update(tf.keys())
    n = len(docs)
    idf = {t: math.log((n - d + 0.5) / (d + 0.5) + 1.0) for t, d in df.items()}
    return Bm25Index(
        ids=tuple(d.id for d in docs),
        term_freqs=tuple(term_freqs),
        doc_lens=tuple(doc_lens),
        idf=idf,
        avgdl=sum(doc_lens) / n,
        k1=k1,
        b=b,
    )


def _scores(index: Bm25Index, query_tokens: list[str]) -> list[float]:
    scores = [0.0] * len(index.ids)
    for i, tf in enumerate(index.term_freqs):
        norm = index.k1 * (1.0 - index.b + index.b * index.doc_lens[i] / index.avgdl)
        s = 0.0
        for t in query_tokens:
            f = tf.get(t)
            if not f:
                continue
            s += index.idf[t] * f * (index.k1 + 1.0) / (f + norm)
        scores[i] = s
    return scores


def query(index: Bm25Index, doc: LyricsDoc | str, top_n: int | None = None) -> list[tuple[str, float]]:
    """Rank every indexed document against the query text, best first.

    Score ties are broken by ascending document id.
    """
    text = doc.text if isinstance(doc, LyricsDoc) else doc
    scores = _scores(index, tokenize(text))
    ranked = sorted(zip(index.ids, scores), key=lambda pair: (-pair[1], pair[0]))
    return ranked[:top_n] if top_n is not None else ranked


@dataclass(frozen=True)
class HitRateTable:
    """Per rank-range hit percentages with a running cumulative column."""

    rows: tuple[tuple[str, float, float], ...]  # (bucket label, rate %, cumulative %)
    total_events: int
    mode: str

    def __post_init__(self):
        running = 0.0
        for _, rate, cumulative in self.rows:
            running += rate
            if abs(cumulative - running) > 0.01:
                raise ValidationError("cumulative column inconsistent with bucket sums")
            if rate < 0:
                raise ValidationError("negative hit rate")

    def to_records(self) -> list[dict]:
        return [{"bucket": label, "rate": rate, "cumulative": cum} for label, rate, cum in self.rows]


def hit_rate(index: Bm25Index, synthetic_docs: Iterable[LyricsDoc], mode: str = "pair") -> HitRateTable:
    """Audit how highly generation seeds rank when queried with their outputs.

    mode="pair": one event per (query, seed) pair, using the seed's rank in
    the query's full ranking. mode="best": one event per query, using the
    best rank among its seeds.
    """
    if mode not in ("pair", "best"):
        raise ValidationError(f"mode must be 'pair' or 'best', got {mode!r}")
    id_set = set(index.ids)
    events: list[int] = []
    n_queries = 0
    for doc in synthetic_docs:
        if not doc.seed_ids:
            continue
        for seed in doc.seed_ids:
            if seed not in id_set:
                raise ValidationError(f"seed id {seed!r} of document {doc.id!r} is not in the index")
        n_queries += 1
        ranking = query(index, doc)
        positions = {doc_id: i + 1 for i, (doc_id, _) in enumerate(ranking)}
        ranks = [positions[seed] for seed in doc.seed_ids]
        if mode == "pair":
            events.extend(ranks)
        else:
            events.append(min(ranks))
    if not events:
        raise EmptyInputError("no (query, seed) events: synthetic docs carry no seed ids")
    rows = []
    cumulative = 0.0
    for label, lo, hi in BUCKETS:
        hits = sum(1 for r in events if lo <= r <= hi)
        rate = 100.0 * hits / len(events)
        cumulative += rate
        rows.append((label, rate, cumulative))
    return HitRateTable(rows=tuple(rows), total_events=len(events), mode=mode)


def render_hit_rate_text(table: HitRateTable) -> str:
    lines = [
        f"Rank        % Hit rate   Cumulated % Hit rate   ({table.total_events} events, mode={table.mode})",
    ]
    for label, rate, cum in table.rows:
        lines.append(f"{label:<12}{rate:>9.2f}   {cum:>9.2f}")
    return "\n".join(lines) + "\n"
