import random

import pytest

from lyricforge.tokenprob import TokenLogProbs


def make_stream(logprobs, verse_breaks=(0,), doc_id="doc", model="test"):
    tokens = tuple((f"t{i}", float(lp)) for i, lp in enumerate(logprobs))
    return TokenLogProbs(doc_id=doc_id, model=model, tokens=tokens, verse_breaks=tuple(verse_breaks))


def random_stream(rng: random.Random, n_tokens=None, n_verses=None, doc_id="doc"):
    """A random valid TokenLogProbs fixture."""
    n_tokens = n_tokens or rng.randint(5, 60)
    n_verses = n_verses or rng.randint(1, min(5, n_tokens))
    breaks = sorted(rng.sample(range(1, n_tokens), n_verses - 1)) if n_verses > 1 else []
    logprobs = [-rng.random() * 5.0 for _ in range(n_tokens)]
    return make_stream(logprobs, verse_breaks=[0] + breaks, doc_id=doc_id)


@pytest.fixture
def rng():
    return random.Random(1234)


@pytest.fixture(scope="session")
def fixture_corpus():
    from lyricforge.fixtures import build_fixture_corpus

    return build_fixture_corpus(seed=42)
