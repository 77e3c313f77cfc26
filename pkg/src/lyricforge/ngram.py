"""Character-level n-gram language model with additive smoothing.

Serves as a deterministic, dependency-free token-probability provider: one
token per character, verse boundaries modelled with a dedicated symbol so the
scored stream aligns with the document's stanzas.
"""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .corpus import LyricsDoc
from .errors import ConfigError, EmptyInputError, FormatError, ValidationError

VERSE_SYMBOL = "<v>"
OOV_SYMBOL = "<oov>"
SPECIAL_SYMBOLS = (VERSE_SYMBOL, OOV_SYMBOL)

MODEL_FORMAT = "lyricforge-ngram"
MODEL_VERSION = 1


@dataclass
class NgramModel:
    """Counts-based model: p(s|c) = (count(c,s) + alpha) / (total(c) + alpha * |vocab|)."""

    order: int
    alpha: float
    vocab: frozenset[str]
    counts: dict[tuple[str, ...], Counter] = field(default_factory=dict)
    totals: dict[tuple[str, ...], int] = field(default_factory=dict)

    def __post_init__(self):
        if self.order < 1:
            raise ConfigError(f"order must be >= 1, got {self.order}")
        if self.alpha <= 0:
            raise ConfigError(f"alpha must be > 0, got {self.alpha}")
        if not set(SPECIAL_SYMBOLS) <= self.vocab:
            raise ValidationError("vocab must contain the verse-boundary and OOV symbols")

    @classmethod
    def empty(cls, vocab: Iterable[str], order: int = 3, alpha: float = 0.5) -> "NgramModel":
        """A model with zero counts: every symbol is uniform at 1/|vocab|."""
        return cls(order=order, alpha=alpha, vocab=frozenset(vocab) | set(SPECIAL_SYMBOLS))

    def _map_symbol(self, sym: str) -> str:
        return sym if sym in self.vocab else OOV_SYMBOL

    def logprob(self, context: Sequence[str], symbol: str) -> float:
        context = tuple(self._map_symbol(s) for s in context)
        symbol = self._map_symbol(symbol)
        count = self.counts.get(context, {}).get(symbol, 0)
        total = self.totals.get(context, 0)
        return math.log((count + self.alpha) / (total + self.alpha * len(self.vocab)))

    def distribution(self, context: Sequence[str]) -> dict[str, float]:
        """Full smoothed next-symbol distribution for a context; sums to 1."""
        context = tuple(self._map_symbol(s) for s in context)
        counter = self.counts.get(context, {})
        total = self.totals.get(context, 0)
        denom = total + self.alpha * len(self.vocab)
        return {s: (counter.get(s, 0) + self.alpha) / denom for s in sorted(self.vocab)}


def _doc_stream(doc: LyricsDoc, order: int) -> list[str]:
    # Verse boundaries and document edges share one padding symbol, so the
    # first character of every verse is conditioned on a boundary context.
    stream = [VERSE_SYMBOL] * max(1, order - 1)
    for verse in doc.verses:
        stream.extend(verse.text)
        stream.append(VERSE_SYMBOL)
    return stream


def train(corpus: Iterable[LyricsDoc], order: int = 3, alpha: float = 0.5) -> NgramModel:
    """Fit counts from the canonical text of the given documents."""
    docs = list(corpus)
    if not docs:
        raise EmptyInputError("training corpus is empty")
    vocab = set(SPECIAL_SYMBOLS)
    for doc in docs:
        vocab.update(doc.text)
    model = NgramModel(order=order, alpha=alpha, vocab=frozenset(vocab))
    pad = max(1, order - 1)
    for doc in docs:
        stream = _doc_stream(doc, order)
        for i in range(pad, len(stream)):
            symbol = stream[i]
            if symbol == VERSE_SYMBOL:
                continue  # boundaries pad contexts; they are not emission events
            context = tuple(stream[i - order + 1 : i]) if order > 1 else ()
            model.counts.setdefault(context, Counter())[symbol] += 1
            model.totals[context] = model.totals.get(context, 0) + 1
    return model


def score(model: NgramModel, doc: LyricsDoc) -> "TokenLogProbs":
    """Score a document character by character.

    Emits one (character, logprob) token per character of the canonical verse
    text; boundary symbols condition the context but are not emitted.
    """
    from .tokenprob import TokenLogProbs

    order = model.order
    pad = max(1, order - 1)
    stream = _doc_stream(doc, order)
    tokens: list[tuple[str, float]] = []
    verse_breaks: list[int] = []
    pos = pad
    for verse in doc.verses:
        verse_breaks.append(len(tokens))
        for ch in verse.text:
            context = tuple(stream[pos - order + 1 : pos]) if order > 1 else ()
            tokens.append((ch, model.logprob(context, ch)))
            pos += 1
        pos += 1  # skip the boundary symbol
    return TokenLogProbs(
        doc_id=doc.id,
        model=f"char-ngram-{order}",
        tokens=tuple(tokens),
        verse_breaks=tuple(verse_breaks),
    )


# ---------------------------------------------------------------------------
# Model file: versioned header line, then one tab-separated, lexicographically
# sorted line per (context, symbol, count). Symbols are JSON-encoded strings;
# ordinary symbols are single characters, special symbols are the multi-char
# names above.


def _enc(sym: str) -> str:
    return json.dumps(sym, ensure_ascii=True)


def save_model(model: NgramModel, path) -> None:
    header = "\t".join(
        [
            MODEL_FORMAT,
            str(MODEL_VERSION),
            str(model.order),
            repr(model.alpha),
            json.dumps(sorted(model.vocab), ensure_ascii=True),
        ]
    )
    lines = []
    for context, counter in model.counts.items():
        ctx = json.dumps(list(context), ensure_ascii=True)
        for symbol, count in counter.items():
            lines.append((ctx, _enc(symbol), count))
    lines.sort(key=lambda t: (t[0], t[1]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for ctx, sym, count in lines:
            fh.write(f"{ctx}\t{sym}\t{count}\n")


def _decode_symbol(raw: str, *, path, line: int) -> str:
    sym = json.loads(raw)
    if not isinstance(sym, str) or (len(sym) != 1 and sym not in SPECIAL_SYMBOLS):
        raise FormatError(f"invalid symbol {raw}", path=path, line=line)
    return sym


def load_model(path) -> NgramModel:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        parts = header.split("\t")
        if len(parts) != 5 or parts[0] != MODEL_FORMAT:
            raise FormatError("not a model file (bad header)", path=path, line=1)
        if parts[1] != str(MODEL_VERSION):
            raise FormatError(f"unsupported model version {parts[1]!r}", path=path, line=1)
        try:
            order = int(parts[2])
            alpha = float(parts[3])
            vocab = json.loads(parts[4])
        except ValueError as exc:
            raise FormatError(f"malformed header: {exc}", path=path, line=1) from exc
        model = NgramModel(order=order, alpha=alpha, vocab=frozenset(vocab))
        for line_no, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                raise FormatError("expected 3 tab-separated columns", path=path, line=line_no)
            context = tuple(
                _decode_symbol(json.dumps(s, ensure_ascii=True), path=path, line=line_no)
                for s in json.loads(cols[0])
            )
            symbol = _decode_symbol(cols[1], path=path, line=line_no)
            count = int(cols[2])
            if count <= 0:
                raise FormatError("counts must be positive", path=path, line=line_no)
            model.counts.setdefault(context, Counter())[symbol] += count
            model.totals[context] = model.totals.get(context, 0) + count
    return model
