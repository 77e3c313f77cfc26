import json
import random

import pytest

from lyricforge.corpus import HUMAN, SYNTHETIC, LyricsDoc
from lyricforge.detector import KnnConfig
from lyricforge.errors import ConfigError, ValidationError
from lyricforge.ngram import score, train
from lyricforge.scenarios import (
    ScenarioConfig,
    k_sweep,
    render_k_sweep_text,
    render_report_text,
    report_to_json,
    run_scenario,
    split_corpus,
)
from lyricforge.tokenprob import extract_all


def tiny_corpus():
    """Two docs per (language, genre, class): per_cell=1 leaves one train, one test."""
    docs = []
    for lang in ("en", "de"):
        for genre in ("pop", "rock"):
            for label in (HUMAN, SYNTHETIC):
                for i in range(2):
                    docs.append(
                        LyricsDoc.create(
                            id=f"{lang}-{genre}-{label[0]}{i}",
                            language=lang,
                            genre=genre,
                            artist=f"{lang}-artist{i}",
                            source_label=label,
                            generator="gen" if label == SYNTHETIC else None,
                            text=f"line one {lang}\nline two {genre}",
                        )
                    )
    return docs


def planted_vectors(docs, noise=0.0, seed=0):
    """1-D vectors: humans near 0, synthetics near 10."""
    rng = random.Random(seed)
    return {
        d.id: ((10.0 if d.source_label == SYNTHETIC else 0.0) + rng.uniform(-noise, noise),)
        for d in docs
    }


@pytest.fixture(scope="module")
def fixture_setup():
    from lyricforge.fixtures import build_fixture_corpus

    docs = build_fixture_corpus(seed=42)
    humans = [d for d in docs if d.source_label == HUMAN]
    model = train(humans, order=3, alpha=0.5)
    vectors = {}
    for doc in docs:
        for fv in extract_all(score(model, doc)):
            if fv.name == "min_k":
                vectors[doc.id] = fv.values
    return docs, vectors


class TestSplit:
    def test_deterministic_and_disjoint(self, fixture_setup):
        docs, _ = fixture_setup
        a = split_corpus(docs, 5, 42)
        b = split_corpus(docs, 5, 42)
        assert a == b
        assert set(a.train_ids).isdisjoint(a.test_ids)
        assert set(a.train_ids) | set(a.test_ids) == {d.id for d in docs}

    def test_cell_orders_are_nested_prefixes(self, fixture_setup):
        docs, _ = fixture_setup
        split = split_corpus(docs, 5, 42)
        for key, order in split.cell_order.items():
            assert len(order) == 5
        smaller = split_corpus(docs, 3, 42)
        for key, order in smaller.cell_order.items():
            assert order == split.cell_order[key][:3]

    def test_different_seed_changes_split(self, fixture_setup):
        docs, _ = fixture_setup
        assert split_corpus(docs, 5, 42).train_ids != split_corpus(docs, 5, 43).train_ids

    def test_holdout_artists_never_train(self, fixture_setup):
        docs, _ = fixture_setup
        artist = docs[0].artist
        split = split_corpus(docs, 5, 42, holdout_artists=[artist])
        by_id = {d.id: d for d in docs}
        assert all(by_id[i].artist != artist for i in split.train_ids)

    def test_small_cell_warning(self):
        docs = tiny_corpus()
        split = split_corpus(docs, 5, 42)
        assert split.warnings  # every cell has only 2 docs


class TestScenarios:
    def test_baseline_self_classification(self):
        # test vectors duplicate train vectors exactly -> k=1 is perfect
        docs = tiny_corpus()
        vectors = planted_vectors(docs)
        cfg = ScenarioConfig(name="baseline", feature="f", knn=KnnConfig(k=1), train_per_cell=1)
        report = run_scenario(docs, vectors, cfg)
        row = report.rows[0]
        assert row.avg_macro == 1.0
        assert row.overall.macro_recall == 1.0

    def test_scalability_endpoint_equals_baseline(self, fixture_setup):
        docs, vectors = fixture_setup
        base_cfg = ScenarioConfig(name="baseline", feature="min_k")
        scal_cfg = ScenarioConfig(name="scalability", feature="min_k")
        baseline = run_scenario(docs, vectors, base_cfg)
        scalability = run_scenario(docs, vectors, scal_cfg)
        top = scalability.rows[-1]
        assert top.setup == "5"
        assert top.slices == baseline.rows[0].slices
        assert top.overall == baseline.rows[0].overall
        assert top.n_space == baseline.rows[0].n_space

    def test_robustness_first_row_equals_cross_lingual_source(self, fixture_setup):
        docs, vectors = fixture_setup
        cross = run_scenario(docs, vectors, ScenarioConfig(name="cross_lingual", feature="min_k"))
        robust = run_scenario(docs, vectors, ScenarioConfig(name="robustness", feature="min_k"))
        assert cross.rows[0].setup == robust.rows[0].setup == "en"
        assert cross.rows[0].slices == robust.rows[0].slices
        assert cross.rows[0].overall == robust.rows[0].overall

    def test_cross_lingual_has_row_per_language(self, fixture_setup):
        docs, vectors = fixture_setup
        report = run_scenario(docs, vectors, ScenarioConfig(name="cross_lingual", feature="min_k"))
        assert [row.setup for row in report.rows] == ["en", "de", "fr"]

    def test_robustness_cumulative_labels(self, fixture_setup):
        docs, vectors = fixture_setup
        report = run_scenario(docs, vectors, ScenarioConfig(name="robustness", feature="min_k"))
        assert [row.setup for row in report.rows] == ["en", "+ de", "+ fr"]

    def test_genre_novelty_flags_unseen(self, fixture_setup):
        docs, vectors = fixture_setup
        # restrict the space language to en and drop one genre from en's train:
        report = run_scenario(
            docs, vectors, ScenarioConfig(name="genre_novelty", feature="min_k", space_language="en")
        )
        row = report.rows[0]
        keys = {s.key: s for s in row.slices}
        # all fixture genres exist in en, so everything is seen
        assert all(s.unseen is False for s in row.slices)
        assert "de/pop" in keys and "fr/folk" in keys

    def test_genre_novelty_unseen_marking(self):
        docs = [d for d in tiny_corpus() if not (d.language == "en" and d.genre == "rock")]
        # en test docs exist only for pop; de has pop+rock -> de/rock is unseen
        vectors = planted_vectors(docs)
        cfg = ScenarioConfig(
            name="genre_novelty", feature="f", knn=KnnConfig(k=1), train_per_cell=1, space_language="en"
        )
        report = run_scenario(docs, vectors, cfg)
        flags = {s.key: s.unseen for s in report.rows[0].slices}
        assert flags["de/rock"] is True
        assert flags["de/pop"] is False

    def test_billboard_slices(self, fixture_setup):
        docs, vectors = fixture_setup
        holdout = ("en pop band 2", "de rock band 2")
        report = run_scenario(
            docs,
            vectors,
            ScenarioConfig(name="billboard", feature="min_k", holdout_artists=holdout),
        )
        keys = {s.key for s in report.rows[0].slices}
        assert any(k.endswith("/unseen") for k in keys)
        assert any(k.startswith("human/") for k in keys)
        assert any(k.startswith("markov1/") or k.startswith("markov2/") for k in keys)

    def test_report_determinism(self, fixture_setup):
        docs, vectors = fixture_setup
        cfg = ScenarioConfig(name="robustness", feature="min_k")
        a = report_to_json(run_scenario(docs, vectors, cfg))
        b = report_to_json(run_scenario(docs, vectors, cfg))
        assert a == b

    def test_macro_identity_invariant(self, fixture_setup):
        docs, vectors = fixture_setup
        report = run_scenario(docs, vectors, ScenarioConfig(name="baseline", feature="min_k"))
        for row in report.rows:
            for s in row.slices:
                m = s.metrics
                if m.macro_recall is not None:
                    assert abs(m.macro_recall - (m.recall_human + m.recall_synthetic) / 2) < 1e-9
                for value in (m.recall_human, m.recall_synthetic, m.macro_recall, m.micro_recall, m.auroc):
                    assert value is None or 0.0 <= value <= 1.0

    def test_permuting_corpus_order_changes_nothing(self, fixture_setup):
        docs, vectors = fixture_setup
        cfg = ScenarioConfig(name="baseline", feature="min_k")
        shuffled = list(docs)
        random.Random(9).shuffle(shuffled)
        assert report_to_json(run_scenario(shuffled, vectors, cfg)) == report_to_json(
            run_scenario(docs, vectors, cfg)
        )

    def test_missing_vector_rejected(self, fixture_setup):
        docs, vectors = fixture_setup
        partial = dict(vectors)
        partial.pop(docs[0].id)
        with pytest.raises(ValidationError, match=docs[0].id):
            run_scenario(docs, partial, ScenarioConfig(name="baseline", feature="min_k"))

    def test_unknown_scenario_rejected(self):
        with pytest.raises(ConfigError):
            ScenarioConfig(name="mystery", feature="f")

    def test_text_rendering(self, fixture_setup):
        docs, vectors = fixture_setup
        report = run_scenario(docs, vectors, ScenarioConfig(name="robustness", feature="min_k"))
        text = render_report_text(report)
        assert "# scenario: robustness" in text
        assert "Setup" in text and "Avg." in text
        assert "+ fr" in text


class TestKSweep:
    def test_schema_and_values(self, fixture_setup):
        docs, vectors = fixture_setup
        table = k_sweep(docs, vectors, ScenarioConfig(name="baseline", feature="min_k"), ks=(1, 3, 5))
        assert table.ks == (1, 3, 5)
        assert table.languages == ("en", "de", "fr")
        for lang in table.languages:
            assert len(table.cells[lang]) == 3
            for value in table.cells[lang]:
                assert value is None or 0.0 <= value <= 1.0
        obj = table.to_json_obj()
        assert {"ks", "languages", "rows", "avg", "config"} <= set(obj)
        text = render_k_sweep_text(table)
        assert "k=1" in text and "Avg." in text

    def test_bad_k_rejected(self, fixture_setup):
        docs, vectors = fixture_setup
        with pytest.raises(ConfigError):
            k_sweep(docs, vectors, ScenarioConfig(name="baseline", feature="min_k"), ks=(0,))
