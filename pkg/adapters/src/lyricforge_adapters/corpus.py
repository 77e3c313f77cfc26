"""Minimal reader for the corpus interchange format.

The adapters consume only the published JSONL schema; they deliberately do
not depend on the main package. Texts are expected in canonical form (verses
separated by exactly one blank line), which `lyricforge validate` guarantees.
"""
from __future__ import annotations

import json
from dataclasses import dataclass


@dataclass(frozen=True)
class CorpusDoc:
    id: str
    text: str

    @property
    def verse_texts(self) -> list[str]:
        return self.text.split("\n\n")

    @property
    def verse_starts(self) -> list[int]:
        """Character offset of the first character of each verse."""
        starts = []
        offset = 0
        for verse in self.verse_texts:
            starts.append(offset)
            offset += len(verse) + 2  # the "\n\n" separator
        return starts


def read_corpus(path, limit: int | None = None) -> list[CorpusDoc]:
    docs: list[CorpusDoc] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{line_no}: invalid JSON: {exc.msg}") from exc
            if not isinstance(record, dict) or "id" not in record or "text" not in record:
                raise ValueError(f"{path}:{line_no}: not a corpus record")
            docs.append(CorpusDoc(id=record["id"], text=record["text"]))
            if limit is not None and len(docs) >= limit:
                break
    if not docs:
        raise ValueError(f"{path}: no documents")
    return docs
