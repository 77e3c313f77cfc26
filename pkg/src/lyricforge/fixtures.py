"""Deterministic desk-scale fixture corpus with a planted human/synthetic split.

"Human" lyrics are built from small per-language lexicons (distinct character
distributions per language); "synthetic" ones are sampled from low-order
character n-gram models fitted on the human half, so a higher-order model
trained on human text separates the classes by construction.
"""
from __future__ import annotations

import argparse
import random

from . import ngram
from .corpus import HUMAN, SYNTHETIC, LyricsDoc, write_corpus
from .errors import EmptyDocumentError, ValidationError

FIXTURE_LANGUAGES = ("en", "de", "fr")
FIXTURE_GENRES = ("pop", "rock", "folk")

LEXICONS = {
    "en": (
        "love night heart fire dream road home light rain star gold wild free "
        "run away stay close mine yours never always tonight city river shadow "
        "broken silver summer winter falling rising young old story song voice "
        "hold tight slow fast burning ocean thunder whisper"
    ).split(),
    "de": (
        "liebe nacht herz feuer traum straße heimat licht regen stern gold wild "
        "frei laufen bleiben nah mein dein niemals immer heute stadt fluss schatten "
        "gebrochen silber sommer winter fallen steigen jung alt geschichte lied "
        "stimme halten müde träumen grün über schön für zurück"
    ).split(),
    "fr": (
        "amour nuit cœur feu rêve route maison lumière pluie étoile or sauvage "
        "libre courir rester près mien tien jamais toujours soir ville rivière "
        "ombre brisé argent été hiver tomber monter jeune vieux histoire chanson "
        "voix tenir doux vite brûler océan tonnerre murmure"
    ).split(),
}

GENERATORS = ("markov2", "markov1")


def _human_text(rng: random.Random, lexicon: list[str]) -> str:
    verses = []
    n_verses = rng.randint(3, 5)
    for _ in range(n_verses):
        lines = []
        for _ in range(rng.randint(2, 4)):
            words = [rng.choice(lexicon) for _ in range(rng.randint(3, 7))]
            words[0] = words[0].capitalize()
            lines.append(" ".join(words))
        verses.append("\n".join(lines))
    if rng.random() < 0.5:  # chorus-style repetition
        verses.append(verses[min(1, len(verses) - 1)])
    return "\n\n".join(verses)


def _sample_symbol(model: ngram.NgramModel, rng: random.Random, context: tuple[str, ...]) -> str:
    dist = model.distribution(context)
    roll = rng.random()
    acc = 0.0
    for symbol, p in dist.items():
        acc += p
        if roll <= acc:
            return symbol
    return symbol  # float round-off: fall through to the last symbol


def _sample_line(model: ngram.NgramModel, rng: random.Random, min_chars: int = 12, max_chars: int = 48) -> str:
    context = (ngram.VERSE_SYMBOL,) * max(1, model.order - 1)
    chars: list[str] = []
    for _ in range(400):
        symbol = _sample_symbol(model, rng, context)
        context = (context + (symbol,))[-max(1, model.order - 1) :]
        if symbol in (ngram.VERSE_SYMBOL, "\n"):
            if len(chars) >= min_chars:
                break
            continue
        if symbol == ngram.OOV_SYMBOL:
            continue
        chars.append(symbol)
        if len(chars) >= max_chars:
            break
    return "".join(chars).strip()


def _synthetic_text(model: ngram.NgramModel, rng: random.Random) -> str:
    verses = []
    for _ in range(rng.randint(3, 5)):
        lines = [_sample_line(model, rng) for _ in range(rng.randint(2, 4))]
        verses.append("\n".join(line for line in lines if line))
    return "\n\n".join(verses)


def build_fixture_corpus(
    seed: int = 42,
    per_cell_human: int = 12,
    per_cell_synthetic: int = 12,
) -> list[LyricsDoc]:
    """Build the fixture corpus: languages x genres, half human, half synthetic."""
    rng = random.Random(f"lyricforge-fixture|{seed}")
    humans: list[LyricsDoc] = []
    human_ids_by_cell: dict[tuple[str, str], list[str]] = {}
    for lang in FIXTURE_LANGUAGES:
        for genre in FIXTURE_GENRES:
            cell_ids = []
            for i in range(per_cell_human):
                doc_id = f"{lang}-{genre}-h{i:03d}"
                doc = LyricsDoc.create(
                    id=doc_id,
                    language=lang,
                    genre=genre,
                    artist=f"{lang} {genre} band {i % 2 + 1}",
                    source_label=HUMAN,
                    text=_human_text(rng, LEXICONS[lang]),
                )
                humans.append(doc)
                cell_ids.append(doc_id)
            human_ids_by_cell[(lang, genre)] = cell_ids

    # Low-order character models fitted per language on the human half.
    generators = {}
    for lang in FIXTURE_LANGUAGES:
        lang_docs = [d for d in humans if d.language == lang]
        generators[lang] = {
            "markov2": ngram.train(lang_docs, order=2, alpha=0.5),
            "markov1": ngram.train(lang_docs, order=1, alpha=0.5),
        }

    synthetics: list[LyricsDoc] = []
    for lang in FIXTURE_LANGUAGES:
        for genre in FIXTURE_GENRES:
            for i in range(per_cell_synthetic):
                generator = GENERATORS[i % len(GENERATORS)]
                model = generators[lang][generator]
                doc_id = f"{lang}-{genre}-s{i:03d}"
                seeds = rng.sample(human_ids_by_cell[(lang, genre)], 3)
                doc = None
                while doc is None:
                    try:
                        doc = LyricsDoc.create(
                            id=doc_id,
                            language=lang,
                            genre=genre,
                            artist=f"{lang} {genre} band {i % 2 + 1}",
                            source_label=SYNTHETIC,
                            generator=generator,
                            text=_synthetic_text(model, rng),
                            seed_ids=seeds,
                        )
                    except (EmptyDocumentError, ValidationError):
                        doc = None
                synthetics.append(doc)
    return humans + synthetics


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Write the deterministic fixture corpus.")
    parser.add_argument("output", help="corpus JSONL path to write")
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--per-cell", type=int, default=12, help="docs per class per (language, genre)")
    args = parser.parse_args(argv)
    docs = build_fixture_corpus(seed=args.seed, per_cell_human=args.per_cell, per_cell_synthetic=args.per_cell)
    write_corpus(docs, args.output)
    print(f"wrote {len(docs)} documents to {args.output}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
