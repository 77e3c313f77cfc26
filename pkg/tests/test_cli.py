import json
import random

import pytest

from lyricforge.cli import main
from lyricforge.corpus import HUMAN, SYNTHETIC, read_corpus, write_corpus
from lyricforge.embeddings import DocEmbedding, write_embeddings
from lyricforge.evaluation import Annotation, write_annotations
from lyricforge.fixtures import build_fixture_corpus


@pytest.fixture(scope="module")
def corpus_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "corpus.jsonl"
    write_corpus(build_fixture_corpus(seed=42), path)
    return path


def run(*args):
    return main([str(a) for a in args])


class TestValidate:
    def test_valid_corpus(self, corpus_file, capsys):
        assert run("validate", corpus_file) == 0
        assert "OK" in capsys.readouterr().out

    def test_corrupt_line_exit_one_with_line_number(self, tmp_path, corpus_file, capsys):
        bad = tmp_path / "bad.jsonl"
        lines = corpus_file.read_text().splitlines()
        lines.insert(3, "{broken")
        bad.write_text("\n".join(lines) + "\n")
        assert run("validate", bad) == 1
        assert ":4" in capsys.readouterr().err

    def test_unknown_flag_exit_one_with_usage(self, capsys):
        assert run("validate", "--bogus") == 1
        err = capsys.readouterr().err
        assert "Usage" in err or "usage" in err

    def test_seed_reference_check(self, tmp_path, corpus_file, capsys):
        docs = read_corpus(corpus_file)
        synth = [d for d in docs if d.source_label == SYNTHETIC]
        synth_only = tmp_path / "synth.jsonl"
        write_corpus(synth, synth_only)
        # within-file: references point at ids absent from this file -> fine
        assert run("validate", synth_only) == 0
        # strict: all seeds must exist in the reference corpus
        humans_only = tmp_path / "humans.jsonl"
        write_corpus([d for d in docs if d.source_label == HUMAN][:5], humans_only)
        assert run("validate", synth_only, "--seeds-from", humans_only) == 1


class TestOracleAndFeatures:
    def test_train_score_features_pipeline(self, tmp_path, corpus_file, capsys):
        model = tmp_path / "model.ngram"
        logprobs = tmp_path / "lp.jsonl"
        features = tmp_path / "features.jsonl"
        assert run("oracle", "train", "--corpus", corpus_file, "--label", "human", "--output", model) == 0
        assert run("oracle", "score", "--model", model, "--corpus", corpus_file, "--output", logprobs) == 0
        assert run("validate", logprobs, "--corpus", corpus_file) == 0
        assert (
            run("features", "tokenprob", "--logprobs", logprobs, "--corpus", corpus_file, "--output", features)
            == 0
        )
        assert run("validate", features) == 0

    def test_model_is_deterministic(self, tmp_path, corpus_file):
        a, b = tmp_path / "a.ngram", tmp_path / "b.ngram"
        assert run("oracle", "train", "--corpus", corpus_file, "--output", a) == 0
        assert run("oracle", "train", "--corpus", corpus_file, "--output", b) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_inputs_never_mutated(self, tmp_path, corpus_file):
        before = corpus_file.read_bytes()
        model = tmp_path / "model.ngram"
        assert run("oracle", "train", "--corpus", corpus_file, "--output", model) == 0
        assert corpus_file.read_bytes() == before

    def test_refuses_to_overwrite_input(self, corpus_file, capsys):
        code = run("oracle", "train", "--corpus", corpus_file, "--output", corpus_file)
        assert code == 1
        assert "refusing" in capsys.readouterr().err


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory, corpus_file):
    """Run oracle -> features once for the CLI tests below."""
    root = tmp_path_factory.mktemp("pipeline")
    model = root / "model.ngram"
    logprobs = root / "lp.jsonl"
    features = root / "features.jsonl"
    assert run("oracle", "train", "--corpus", corpus_file, "--label", "human", "--output", model) == 0
    assert run("oracle", "score", "--model", model, "--corpus", corpus_file, "--output", logprobs) == 0
    assert run("features", "tokenprob", "--logprobs", logprobs, "--output", features) == 0
    return {"root": root, "features": features, "corpus": corpus_file}


class TestSpaceAndDetect:
    def test_space_build_and_detect(self, tmp_path, pipeline):
        space = tmp_path / "space.txt"
        detections = tmp_path / "detections.json"
        assert (
            run(
                "space", "build",
                "--corpus", pipeline["corpus"],
                "--features", pipeline["features"],
                "--feature", "min_k",
                "--output", space,
            )
            == 0
        )
        assert run("validate", space) == 0
        assert (
            run(
                "detect", "run",
                "--space", space,
                "--features", pipeline["features"],
                "--k", "3",
                "--output", detections,
                "--json",
            )
            == 0
        )
        payload = json.loads(detections.read_text())
        assert payload["config"]["k"] == 3
        assert len(payload["detections"]) == 216
        for det in payload["detections"]:
            assert det["predicted_label"] in (HUMAN, SYNTHETIC)
            assert 0.0 <= det["score_synthetic"] <= 1.0


class TestEvalScenario:
    def test_report_created_and_deterministic(self, tmp_path, pipeline):
        out_a = tmp_path / "a.json"
        out_b = tmp_path / "b.json"
        for out in (out_a, out_b):
            assert (
                run(
                    "eval", "scenario",
                    "--name", "baseline",
                    "--corpus", pipeline["corpus"],
                    "--features", pipeline["features"],
                    "--feature", "min_k",
                    "--output", out,
                    "--json",
                )
                == 0
            )
        assert out_a.read_bytes() == out_b.read_bytes()
        report = json.loads(out_a.read_text())
        assert report["scenario"] == "baseline"
        assert report["rows"][0]["avg_macro"] >= 0.8

    def test_text_report_and_plot_data(self, tmp_path, pipeline):
        out = tmp_path / "report.txt"
        csv_out = tmp_path / "plot.csv"
        assert (
            run(
                "eval", "scenario",
                "--name", "robustness",
                "--corpus", pipeline["corpus"],
                "--features", pipeline["features"],
                "--feature", "perplexity",
                "--output", out,
                "--plot-data", csv_out,
            )
            == 0
        )
        text = out.read_text()
        assert "# scenario: robustness" in text and "Avg." in text
        header = csv_out.read_text().splitlines()[0]
        assert header == "scenario,setup,slice,unseen,macro_recall,micro_recall,auroc"

    def test_k_sweep_table(self, tmp_path, pipeline):
        out = tmp_path / "ksweep.json"
        assert (
            run(
                "eval", "scenario",
                "--name", "baseline",
                "--corpus", pipeline["corpus"],
                "--features", pipeline["features"],
                "--feature", "min_k",
                "--k-sweep", "1,3,5,10,20",
                "--output", out,
                "--json",
            )
            == 0
        )
        table = json.loads(out.read_text())
        assert table["ks"] == [1, 3, 5, 10, 20]
        assert [row["language"] for row in table["rows"]] == ["en", "de", "fr"]


class TestEvalAgreement:
    def test_agreement_report(self, tmp_path, pipeline):
        docs = read_corpus(pipeline["corpus"])[:30]
        rng = random.Random(4)
        anns = []
        for rater in ("r1", "r2"):
            for doc in docs:
                label = doc.source_label if rng.random() < 0.8 else (
                    HUMAN if doc.source_label == SYNTHETIC else SYNTHETIC
                )
                anns.append(Annotation(rater, doc.id, label, rng.randint(1, 4)))
        ann_path = tmp_path / "ann.jsonl"
        write_annotations(anns, ann_path)
        out = tmp_path / "agreement.json"
        assert (
            run(
                "eval", "agreement",
                "--annotations", ann_path,
                "--corpus", pipeline["corpus"],
                "--output", out,
                "--json",
            )
            == 0
        )
        payload = json.loads(out.read_text())
        assert payload["pairs"][0]["raters"] == ["r1", "r2"]
        assert "kappa" in payload["pairs"][0]


class TestAuditBm25:
    def test_hit_rate_outputs(self, tmp_path, pipeline):
        out_text = tmp_path / "audit.txt"
        out_json = tmp_path / "audit.json"
        for out, extra in ((out_text, ()), (out_json, ("--json",))):
            assert (
                run(
                    "audit", "bm25",
                    "--human", pipeline["corpus"],
                    "--synthetic", pipeline["corpus"],
                    "--output", out,
                    *extra,
                )
                == 0
            )
        payload = json.loads(out_json.read_text())
        assert [row["bucket"] for row in payload["rows"]] == [
            "1", "2", "3", "3 to 5", "5 to 10", "10 to 20", "20 to 50",
        ]
        assert "Cumulated" in out_text.read_text()


class TestCuration:
    def test_normalize_iqr_semantic_chain(self, tmp_path, pipeline):
        docs = read_corpus(pipeline["corpus"])
        humans = [d for d in docs if d.source_label == HUMAN]
        synth = [d for d in docs if d.source_label == SYNTHETIC]
        human_path = tmp_path / "human.jsonl"
        synth_path = tmp_path / "synth.jsonl"
        write_corpus(humans, human_path)
        write_corpus(synth, synth_path)
        rng = random.Random(8)
        emb_path = tmp_path / "emb.jsonl"
        write_embeddings(
            [
                DocEmbedding(d.id, "toy", (rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)))
                for d in docs
            ],
            emb_path,
        )
        normalized = tmp_path / "normalized.jsonl"
        kept_iqr = tmp_path / "iqr.jsonl"
        kept_sem = tmp_path / "sem.jsonl"
        rejects = tmp_path / "rejects.jsonl"
        assert run("curate", "normalize", "--input", synth_path, "--output", normalized) == 0
        assert (
            run(
                "curate", "iqr",
                "--candidates", normalized,
                "--human", human_path,
                "--group-key", "language_genre",
                "--output", kept_iqr,
                "--rejects", rejects,
            )
            == 0
        )
        assert (
            run(
                "curate", "semantic",
                "--candidates", kept_iqr,
                "--human", human_path,
                "--embeddings", emb_path,
                "--group-key", "language_genre",
                "--cap", "5",
                "--output", kept_sem,
            )
            == 0
        )
        n_norm = len(read_corpus(normalized))
        n_iqr = len(read_corpus(kept_iqr))
        n_sem = len(read_corpus(kept_sem))
        assert len(synth) >= n_norm >= n_iqr >= n_sem
        for line in rejects.read_text().splitlines():
            rec = json.loads(line)
            assert set(rec) == {"id", "stage", "reason"}

    def test_validate_embeddings(self, tmp_path):
        emb_path = tmp_path / "emb.jsonl"
        write_embeddings([DocEmbedding("a", "m", (1.0, 2.0))], emb_path)
        assert run("features", "validate-embeddings", "--embeddings", emb_path) == 0


def test_lyricforge_data_env(tmp_path, corpus_file, monkeypatch, capsys):
    monkeypatch.setenv("LYRICFORGE_DATA", str(corpus_file.parent))
    assert run("validate", corpus_file.name) == 0
