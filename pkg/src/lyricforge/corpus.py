"""Lyric document model: verse segmentation, text statistics, and corpus JSONL I/O.

A document's text is stored in canonical form: UTF-8, NFC, LF line endings,
trailing whitespace trimmed per line, verses separated by exactly one blank
line. Verses are the partition of the text by blank-line separators.
"""
from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .errors import EmptyDocumentError, FormatError, ValidationError

HUMAN = "human"
SYNTHETIC = "synthetic"
LABELS = (HUMAN, SYNTHETIC)

MAX_SEED_IDS = 3

# The corpus interchange format carries exactly these fields, in this order.
CORPUS_FIELDS = ("id", "language", "genre", "artist", "label", "generator", "text", "seed_ids")


@dataclass(frozen=True)
class Verse:
    """A stanza: an ordered list of non-empty lines without line breaks."""

    lines: tuple[str, ...]

    def __post_init__(self):
        if not self.lines:
            raise ValidationError("verse has no lines")
        for line in self.lines:
            if not line:
                raise ValidationError("verse contains an empty line")
            if "\n" in line or "\r" in line:
                raise ValidationError("verse line contains a line break")

    @property
    def text(self) -> str:
        return "\n".join(self.lines)


def canonicalize_text(raw: str) -> tuple[str, tuple[Verse, ...]]:
    """Normalize raw text and segment it into verses.

    Applies NFC normalization, converts line endings to LF, trims trailing
    whitespace per line, and splits verses on runs of one or more blank lines.
    Returns the canonical text together with the verse partition.
    """
    text = unicodedata.normalize("NFC", raw)
    text = text.replace("\r\n", "\n").replace("\r", "\n")
    verses: list[Verse] = []
    current: list[str] = []
    for line in text.split("\n"):
        line = line.rstrip()
        if line:
            current.append(line)
        elif current:
            verses.append(Verse(tuple(current)))
            current = []
    if current:
        verses.append(Verse(tuple(current)))
    if not verses:
        raise EmptyDocumentError("document has no non-blank lines")
    canonical = "\n\n".join(v.text for v in verses)
    return canonical, tuple(verses)


@dataclass(frozen=True)
class LyricsDoc:
    """One song's lyrics with provenance metadata.

    `text` is always the canonical serialization of `verses`; construct
    instances through `LyricsDoc.create` so the pair stays consistent.
    """

    id: str
    language: str
    genre: str
    artist: str
    source_label: str
    generator: str | None
    text: str
    verses: tuple[Verse, ...]
    seed_ids: tuple[str, ...] | None = None

    def __post_init__(self):
        if not self.id:
            raise ValidationError("document id must be non-empty")
        if self.source_label not in LABELS:
            raise ValidationError(f"label must be one of {LABELS}, got {self.source_label!r}")
        if self.source_label == HUMAN and self.generator is not None:
            raise ValidationError(f"human document {self.id!r} must not carry a generator")
        if self.source_label == SYNTHETIC and not self.generator:
            raise ValidationError(f"synthetic document {self.id!r} must carry a generator")
        if not self.verses:
            raise EmptyDocumentError(f"document {self.id!r} has no verses")
        expected = "\n\n".join(v.text for v in self.verses)
        if self.text != expected:
            raise ValidationError(f"document {self.id!r}: text is not the canonical verse serialization")
        if self.seed_ids is not None:
            if len(self.seed_ids) > MAX_SEED_IDS:
                raise ValidationError(f"document {self.id!r}: more than {MAX_SEED_IDS} seed ids")
            if not all(self.seed_ids):
                raise ValidationError(f"document {self.id!r}: empty seed id")

    @classmethod
    def create(
        cls,
        *,
        id: str,
        language: str,
        genre: str,
        artist: str,
        source_label: str,
        text: str,
        generator: str | None = None,
        seed_ids: Iterable[str] | None = None,
    ) -> "LyricsDoc":
        """Build a document from raw text, canonicalizing and segmenting it."""
        canonical, verses = canonicalize_text(text)
        return cls(
            id=id,
            language=language,
            genre=genre,
            artist=artist,
            source_label=source_label,
            generator=generator,
            text=canonical,
            verses=verses,
            seed_ids=tuple(seed_ids) if seed_ids is not None else None,
        )

    @property
    def lines(self) -> tuple[str, ...]:
        return tuple(line for verse in self.verses for line in verse.lines)


@dataclass(frozen=True)
class DocStats:
    """Surface statistics used by the curation filters."""

    avg_line_len_words: float
    num_verses: int
    avg_verse_size_lines: float
    word_count: int
    total_lines: int


def compute_stats(doc: LyricsDoc) -> DocStats:
    """Count words (Unicode-whitespace tokens) and verse/line structure."""
    total_lines = sum(len(v.lines) for v in doc.verses)
    word_count = len(doc.text.split())
    num_verses = len(doc.verses)
    return DocStats(
        avg_line_len_words=word_count / total_lines,
        num_verses=num_verses,
        avg_verse_size_lines=total_lines / num_verses,
        word_count=word_count,
        total_lines=total_lines,
    )


def parse_record(obj: object, *, path=None, line: int | None = None) -> LyricsDoc:
    """Parse one corpus record (a decoded JSON object) into a LyricsDoc."""

    def fail(message: str):
        raise FormatError(message, path=path, line=line)

    if not isinstance(obj, dict):
        fail("record is not a JSON object")
    keys = set(obj)
    expected = set(CORPUS_FIELDS)
    if keys != expected:
        missing = sorted(expected - keys)
        extra = sorted(keys - expected)
        parts = []
        if missing:
            parts.append(f"missing fields {missing}")
        if extra:
            parts.append(f"unknown fields {extra}")
        fail("; ".join(parts))
    for field_name in ("id", "language", "genre", "artist", "label", "text"):
        if not isinstance(obj[field_name], str):
            fail(f"field {field_name!r} must be a string")
    if obj["label"] not in LABELS:
        fail(f"label must be one of {LABELS}, got {obj['label']!r}")
    generator = obj["generator"]
    if generator is not None and not isinstance(generator, str):
        fail("field 'generator' must be a string or null")
    seed_ids = obj["seed_ids"]
    if seed_ids is not None:
        if not isinstance(seed_ids, list) or not all(isinstance(s, str) for s in seed_ids):
            fail("field 'seed_ids' must be null or an array of strings")
    try:
        return LyricsDoc.create(
            id=obj["id"],
            language=obj["language"],
            genre=obj["genre"],
            artist=obj["artist"],
            source_label=obj["label"],
            generator=generator,
            text=obj["text"],
            seed_ids=seed_ids,
        )
    except (ValidationError, EmptyDocumentError) as exc:
        fail(str(exc))


def doc_to_record(doc: LyricsDoc) -> dict:
    return {
        "id": doc.id,
        "language": doc.language,
        "genre": doc.genre,
        "artist": doc.artist,
        "label": doc.source_label,
        "generator": doc.generator,
        "text": doc.text,
        "seed_ids": list(doc.seed_ids) if doc.seed_ids is not None else None,
    }


def iter_jsonl(path) -> Iterator[tuple[int, object]]:
    """Yield (line_number, decoded object) for each non-empty line of a JSONL file."""
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                yield line_no, json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"invalid JSON ({exc.msg})", path=path, line=line_no) from exc


def read_corpus(path) -> list[LyricsDoc]:
    """Read a corpus JSONL file; rejects duplicate document ids."""
    docs: list[LyricsDoc] = []
    seen: set[str] = set()
    for line_no, obj in iter_jsonl(path):
        doc = parse_record(obj, path=path, line=line_no)
        if doc.id in seen:
            raise FormatError(f"duplicate document id {doc.id!r}", path=path, line=line_no)
        seen.add(doc.id)
        docs.append(doc)
    return docs


def write_corpus(docs: Iterable[LyricsDoc], path) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for doc in docs:
            fh.write(json.dumps(doc_to_record(doc), ensure_ascii=False) + "\n")


def check_seed_references(docs: Iterable[LyricsDoc], human_ids: dict[str, str] | None = None) -> list[str]:
    """Check that seed_ids point at known human documents.

    `human_ids` maps id -> label for the reference corpus; when omitted, the
    in-file documents are used and ids absent from the file are only noted.
    Returns a list of problem descriptions (empty when clean).
    """
    docs = list(docs)
    strict = human_ids is not None
    if human_ids is None:
        human_ids = {d.id: d.source_label for d in docs}
    problems = []
    for doc in docs:
        for seed in doc.seed_ids or ():
            label = human_ids.get(seed)
            if label is None:
                if strict:
                    problems.append(f"document {doc.id!r}: seed id {seed!r} not found in reference corpus")
            elif label != HUMAN:
                problems.append(f"document {doc.id!r}: seed id {seed!r} is not a human document")
    return problems
