"""Single command-line entry point for the full pipeline.

Exit codes: 0 on success, 1 on usage or validation errors, 2 on internal
errors. Every reporting command supports machine-readable --json output, and
every command is rerunnable: identical inputs and seed give identical bytes.
"""
from __future__ import annotations

import json
import os
from pathlib import Path

import click

from . import bm25 as bm25_mod
from . import curation, detector, embeddings, evaluation, ngram, scenarios, tokenprob
from .corpus import HUMAN, SYNTHETIC, check_seed_references, read_corpus, write_corpus
from .errors import FormatError, LyricforgeError, ValidationError

STANDARDIZE_CHOICES = {"auto": None, "on": True, "off": False}


class Ctx:
    def __init__(self, seed: int, jobs: int, data_dir: str | None):
        self.seed = seed
        self.jobs = jobs
        self.data_dir = Path(data_dir) if data_dir else None
        self.inputs: set[Path] = set()

    def path(self, value: str, *, is_input: bool) -> Path:
        p = Path(value)
        if not p.is_absolute() and self.data_dir is not None:
            p = self.data_dir / p
        p = p.resolve()
        if is_input:
            self.inputs.add(p)
        elif p in self.inputs:
            raise ValidationError(f"refusing to overwrite input file {p}")
        return p


pass_ctx = click.make_pass_decorator(Ctx)


@click.group()
@click.option("--seed", type=int, default=42, show_default=True, help="Seed for all sampling.")
@click.option("--jobs", type=int, default=lambda: os.cpu_count() or 1, help="Worker count (results are independent of it).")
@click.option("--data-dir", type=str, default=lambda: os.environ.get("LYRICFORGE_DATA"), help="Base directory for relative paths (env: LYRICFORGE_DATA).")
@click.pass_context
def cli(ctx, seed, jobs, data_dir):
    """Detection of machine-generated lyrics: curation, features, k-NN, evaluation."""
    ctx.obj = Ctx(seed=seed, jobs=jobs, data_dir=data_dir)


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _dump_json(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------------------
# validate


def _sniff_format(path: Path) -> str:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith(ngram.MODEL_FORMAT):
                return "model"
            if line.startswith(detector.SPACE_FORMAT):
                return "space"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError:
                raise FormatError("cannot detect format: first line is neither JSON nor a known header", path=path, line=1)
            if isinstance(obj, dict):
                keys = set(obj)
                if keys == set(("id", "language", "genre", "artist", "label", "generator", "text", "seed_ids")):
                    return "corpus"
                if keys == {"doc_id", "model", "tokens", "verse_breaks"}:
                    return "logprobs"
                if keys == {"doc_id", "model", "dim", "vector"}:
                    return "embeddings"
                if keys == {"doc_id", "feature", "values"}:
                    return "features"
                if keys == {"rater", "doc_id", "label", "confidence"}:
                    return "annotations"
            raise FormatError("cannot detect format from first record", path=path, line=1)
    raise FormatError("file is empty", path=path)


@cli.command()
@click.argument("file", type=str)
@click.option("--format", "fmt", type=click.Choice(["auto", "corpus", "logprobs", "embeddings", "features", "annotations", "space", "model"]), default="auto", show_default=True)
@click.option("--seeds-from", type=str, default=None, help="Reference corpus that seed_ids must resolve against.")
@click.option("--corpus", "corpus_path", type=str, default=None, help="Corpus to check logprob verse alignment against.")
@pass_ctx
def validate(ctx, file, fmt, seeds_from, corpus_path):
    """Validate FILE against its interchange format."""
    path = ctx.path(file, is_input=True)
    if fmt == "auto":
        fmt = _sniff_format(path)
    if fmt == "corpus":
        docs = read_corpus(path)
        reference = None
        if seeds_from:
            reference = {d.id: d.source_label for d in read_corpus(ctx.path(seeds_from, is_input=True))}
        problems = check_seed_references(docs, reference)
        if problems:
            raise ValidationError("; ".join(problems))
        count = len(docs)
    elif fmt == "logprobs":
        streams = tokenprob.read_logprobs(path)
        if corpus_path:
            docs = {d.id: d for d in read_corpus(ctx.path(corpus_path, is_input=True))}
            for tlp in streams.values():
                if tlp.doc_id not in docs:
                    raise ValidationError(f"logprobs for unknown document {tlp.doc_id!r}")
                tokenprob.check_alignment(tlp, docs[tlp.doc_id])
        count = len(streams)
    elif fmt == "embeddings":
        count = len(embeddings.load_embeddings(path))
    elif fmt == "features":
        count = len(tokenprob.read_features(path))
    elif fmt == "annotations":
        count = len(evaluation.read_annotations(path))
    elif fmt == "space":
        count = len(detector.read_space(path).points)
    else:
        model = ngram.load_model(path)
        count = len(model.counts)
    click.echo(f"OK: {count} {fmt} records in {path}")


# ---------------------------------------------------------------------------
# curate


@cli.group()
def curate():
    """Normalization and filtering of generated lyrics."""


@curate.command("normalize")
@click.option("--input", "input_path", required=True, type=str)
@click.option("--output", required=True, type=str)
@click.option("--rules", type=str, default=None, help="Rules config (default: packaged rules).")
@click.option("--rejects", type=str, default=None, help="Rejection log (JSON Lines).")
@pass_ctx
def curate_normalize(ctx, input_path, output, rules, rejects):
    """Apply normalization rules to every document."""
    docs = read_corpus(ctx.path(input_path, is_input=True))
    rule_set = curation.load_rules(ctx.path(rules, is_input=True)) if rules else curation.default_rules()
    kept, rejections = [], []
    for doc in docs:
        try:
            kept.append(curation.normalize(doc, rule_set))
        except LyricforgeError:
            rejections.append(curation.Rejection(doc.id, "normalize", "empty_after_normalization"))
    write_corpus(kept, ctx.path(output, is_input=False))
    if rejects:
        curation.write_rejections(rejections, ctx.path(rejects, is_input=False))
    click.echo(f"normalized {len(kept)} documents ({len(rejections)} dropped)")


@curate.command("iqr")
@click.option("--candidates", required=True, type=str)
@click.option("--human", "human_path", required=True, type=str)
@click.option("--group-key", type=click.Choice(curation.GROUP_KEYS), default="language_genre", show_default=True)
@click.option("--output", required=True, type=str)
@click.option("--rejects", type=str, default=None)
@pass_ctx
def curate_iqr(ctx, candidates, human_path, group_key, output, rejects):
    """Keep candidates inside the human interquartile range of text statistics."""
    cand = read_corpus(ctx.path(candidates, is_input=True))
    human = [d for d in read_corpus(ctx.path(human_path, is_input=True)) if d.source_label == HUMAN]
    bounds = curation.fit_iqr(human, group_key)
    kept, rejections = curation.iqr_filter(cand, bounds, group_key)
    write_corpus(kept, ctx.path(output, is_input=False))
    if rejects:
        curation.write_rejections(rejections, ctx.path(rejects, is_input=False))
    click.echo(f"kept {len(kept)} of {len(cand)} candidates")


@curate.command("semantic")
@click.option("--candidates", required=True, type=str)
@click.option("--human", "human_path", required=True, type=str)
@click.option("--embeddings", "embeddings_path", required=True, type=str)
@click.option("--group-key", type=click.Choice(curation.GROUP_KEYS), default="language_genre", show_default=True)
@click.option("--cap", type=int, default=curation.DEFAULT_CAP, show_default=True)
@click.option("--aggregation", type=click.Choice(["mean", "max"]), default="mean", show_default=True)
@click.option("--output", required=True, type=str)
@click.option("--rejects", type=str, default=None)
@pass_ctx
def curate_semantic(ctx, candidates, human_path, embeddings_path, group_key, cap, aggregation, output, rejects):
    """Keep the most human-similar candidates per (generator, group) bucket."""
    cand = read_corpus(ctx.path(candidates, is_input=True))
    human = [d for d in read_corpus(ctx.path(human_path, is_input=True)) if d.source_label == HUMAN]
    emb = embeddings.load_embeddings(ctx.path(embeddings_path, is_input=True))
    kept, rejections = curation.semantic_filter(cand, human, emb, group_key, cap=cap, aggregation=aggregation)
    write_corpus([doc for doc, _ in kept], ctx.path(output, is_input=False))
    if rejects:
        curation.write_rejections(rejections, ctx.path(rejects, is_input=False))
    click.echo(f"kept {len(kept)} of {len(cand)} candidates")


# ---------------------------------------------------------------------------
# oracle


@cli.group()
def oracle():
    """Built-in character n-gram probability provider."""


@oracle.command("train")
@click.option("--corpus", "corpus_path", required=True, type=str)
@click.option("--order", type=int, default=3, show_default=True)
@click.option("--alpha", type=float, default=0.5, show_default=True)
@click.option("--label", type=click.Choice(["all", HUMAN, SYNTHETIC]), default="all", show_default=True, help="Train on one class only.")
@click.option("--output", required=True, type=str)
@pass_ctx
def oracle_train(ctx, corpus_path, order, alpha, label, output):
    """Fit the model on a corpus and save it."""
    docs = read_corpus(ctx.path(corpus_path, is_input=True))
    if label != "all":
        docs = [d for d in docs if d.source_label == label]
    model = ngram.train(docs, order=order, alpha=alpha)
    ngram.save_model(model, ctx.path(output, is_input=False))
    click.echo(f"trained order-{order} model on {len(docs)} documents -> {output}")


@oracle.command("score")
@click.option("--model", "model_path", required=True, type=str)
@click.option("--corpus", "corpus_path", required=True, type=str)
@click.option("--output", required=True, type=str)
@pass_ctx
def oracle_score(ctx, model_path, corpus_path, output):
    """Score every document, emitting a TokenLogProbs file."""
    model = ngram.load_model(ctx.path(model_path, is_input=True))
    docs = read_corpus(ctx.path(corpus_path, is_input=True))
    streams = [ngram.score(model, doc) for doc in docs]
    tokenprob.write_logprobs(streams, ctx.path(output, is_input=False))
    click.echo(f"scored {len(streams)} documents -> {output}")


# ---------------------------------------------------------------------------
# features


@cli.group()
def features():
    """Feature extraction and embedding validation."""


@features.command("tokenprob")
@click.option("--logprobs", "logprobs_path", required=True, type=str)
@click.option("--min-k", type=float, default=10.0, show_default=True)
@click.option("--corpus", "corpus_path", type=str, default=None, help="Check verse alignment against this corpus.")
@click.option("--output", required=True, type=str)
@pass_ctx
def features_tokenprob(ctx, logprobs_path, min_k, corpus_path, output):
    """Compute the five probabilistic features for every stream."""
    streams = tokenprob.read_logprobs(ctx.path(logprobs_path, is_input=True))
    if corpus_path:
        docs = {d.id: d for d in read_corpus(ctx.path(corpus_path, is_input=True))}
        for tlp in streams.values():
            if tlp.doc_id not in docs:
                raise ValidationError(f"logprobs for unknown document {tlp.doc_id!r}")
            tokenprob.check_alignment(tlp, docs[tlp.doc_id])
    cfg = tokenprob.ProbFeatureConfig(min_k_percent=min_k)
    out = []
    for doc_id in sorted(streams):
        out.extend(tokenprob.extract_all(streams[doc_id], cfg))
    tokenprob.write_features(out, ctx.path(output, is_input=False))
    click.echo(f"wrote {len(out)} feature vectors -> {output}")


@features.command("validate-embeddings")
@click.option("--embeddings", "embeddings_path", required=True, type=str)
@pass_ctx
def features_validate_embeddings(ctx, embeddings_path):
    """Validate an embedding file (dimensions, finiteness, duplicates)."""
    loaded = embeddings.load_embeddings(ctx.path(embeddings_path, is_input=True))
    click.echo(f"OK: {len(loaded)} embeddings")


# ---------------------------------------------------------------------------
# space / detect


@cli.group()
def space():
    """Vector-space construction."""


@space.command("build")
@click.option("--corpus", "corpus_path", required=True, type=str)
@click.option("--features", "features_path", required=True, type=str)
@click.option("--feature", required=True, type=str, help="Feature name to build the space on.")
@click.option("--standardize", type=click.Choice(sorted(STANDARDIZE_CHOICES)), default="auto", show_default=True)
@click.option("--output", required=True, type=str)
@pass_ctx
def space_build(ctx, corpus_path, features_path, feature, standardize, output):
    """Build a labeled space from one named feature over a corpus."""
    docs = read_corpus(ctx.path(corpus_path, is_input=True))
    table = tokenprob.feature_table(tokenprob.read_features(ctx.path(features_path, is_input=True)), feature)
    vectors = {}
    meta = {}
    for doc in docs:
        if doc.id not in table:
            raise ValidationError(f"no {feature!r} feature for document {doc.id!r}")
        vectors[doc.id] = table[doc.id]
        meta[doc.id] = detector.PointMeta.from_doc(doc)
    built = detector.build_space(feature, vectors, meta, standardize=STANDARDIZE_CHOICES[standardize])
    detector.write_space(built, ctx.path(output, is_input=False))
    click.echo(f"built space with {len(built.points)} points (dim {built.dim}) -> {output}")


@cli.group()
def detect():
    """k-NN classification."""


@detect.command("run")
@click.option("--space", "space_path", required=True, type=str)
@click.option("--features", "features_path", required=True, type=str)
@click.option("--feature", type=str, default=None, help="Feature name (default: the space's feature).")
@click.option("--k", type=int, default=3, show_default=True)
@click.option("--p", type=float, default=2.0, show_default=True)
@click.option("--output", required=True, type=str)
@click.option("--json", "as_json", is_flag=True, help="Write JSON instead of aligned text.")
@pass_ctx
def detect_run(ctx, space_path, features_path, feature, k, p, output, as_json):
    """Classify every document in the feature file against a stored space."""
    loaded = detector.read_space(ctx.path(space_path, is_input=True))
    feature = feature or loaded.feature_name
    table = tokenprob.feature_table(tokenprob.read_features(ctx.path(features_path, is_input=True)), feature)
    if not table:
        raise ValidationError(f"feature file has no {feature!r} vectors")
    cfg = detector.KnnConfig(k=k, p=p)
    config = {"space": str(space_path), "feature": feature, "k": k, "p": p, "seed": ctx.seed}
    ordered_ids = sorted(table)
    if ctx.jobs > 1 and len(ordered_ids) > 64:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=ctx.jobs) as pool:
            detections = list(
                pool.map(lambda doc_id: detector.classify(loaded, table[doc_id], cfg, query_id=doc_id), ordered_ids)
            )
    else:
        detections = [detector.classify(loaded, table[doc_id], cfg, query_id=doc_id) for doc_id in ordered_ids]
    out_path = ctx.path(output, is_input=False)
    if as_json:
        payload = {
            "config": config,
            "detections": [
                {
                    "doc_id": d.doc_id,
                    "predicted_label": d.predicted_label,
                    "score_synthetic": d.score_synthetic,
                    "neighbors": [[nid, dist] for nid, dist in d.neighbor_ids],
                }
                for d in detections
            ],
        }
        _write_text(out_path, _dump_json(payload))
    else:
        lines = [f"# config: {json.dumps(config, sort_keys=True)}"]
        lines.append(f"{'doc_id':<28}{'label':<12}{'score':>7}")
        for d in detections:
            lines.append(f"{d.doc_id:<28}{d.predicted_label:<12}{d.score_synthetic:>7.3f}")
        _write_text(out_path, "\n".join(lines) + "\n")
    click.echo(f"classified {len(detections)} documents -> {output}")


# ---------------------------------------------------------------------------
# eval


@cli.group("eval")
def eval_group():
    """Scenario evaluation and annotation agreement."""


@eval_group.command("scenario")
@click.option("--name", required=True, type=click.Choice(scenarios.SCENARIOS))
@click.option("--corpus", "corpus_path", required=True, type=str)
@click.option("--features", "features_path", required=True, type=str)
@click.option("--feature", required=True, type=str)
@click.option("--k", type=int, default=3, show_default=True)
@click.option("--p", type=float, default=2.0, show_default=True)
@click.option("--standardize", type=click.Choice(sorted(STANDARDIZE_CHOICES)), default="auto", show_default=True)
@click.option("--train-per-cell", type=int, default=5, show_default=True)
@click.option("--language-order", type=str, default=None, help="Comma-separated language order override.")
@click.option("--space-language", type=str, default=None, help="Source language for genre_novelty.")
@click.option("--holdout-artist", "holdout_artists", type=str, multiple=True, help="Artist kept out of the space (billboard).")
@click.option("--k-sweep", "k_sweep_values", type=str, default=None, help="Comma-separated k values; emits the k-sweep table instead.")
@click.option("--plot-data", "plot_data", type=str, default=None, help="Also write per-slice rows as CSV.")
@click.option("--output", required=True, type=str)
@click.option("--json", "as_json", is_flag=True)
@pass_ctx
def eval_scenario(ctx, name, corpus_path, features_path, feature, k, p, standardize, train_per_cell,
                  language_order, space_language, holdout_artists, k_sweep_values, plot_data, output, as_json):
    """Run one evaluation scenario and write its report."""
    docs = read_corpus(ctx.path(corpus_path, is_input=True))
    table = tokenprob.feature_table(tokenprob.read_features(ctx.path(features_path, is_input=True)), feature)
    cfg = scenarios.ScenarioConfig(
        name=name,
        feature=feature,
        knn=detector.KnnConfig(k=k, p=p, standardize=STANDARDIZE_CHOICES[standardize]),
        seed=ctx.seed,
        train_per_cell=train_per_cell,
        language_order=tuple(language_order.split(",")) if language_order else None,
        space_language=space_language,
        holdout_artists=tuple(holdout_artists),
    )
    out_path = ctx.path(output, is_input=False)
    if k_sweep_values:
        ks = tuple(int(v) for v in k_sweep_values.split(","))
        table_out = scenarios.k_sweep(docs, table, cfg, ks)
        text = _dump_json(table_out.to_json_obj()) if as_json else scenarios.render_k_sweep_text(table_out)
        _write_text(out_path, text)
        click.echo(f"k-sweep table -> {output}")
        return
    report = scenarios.run_scenario(docs, table, cfg)
    text = scenarios.report_to_json(report) if as_json else scenarios.render_report_text(report)
    _write_text(out_path, text)
    if plot_data:
        rows = ["scenario,setup,slice,unseen,macro_recall,micro_recall,auroc"]
        for row in report.rows:
            for s in row.slices:
                rows.append(
                    ",".join(
                        [
                            report.scenario,
                            row.setup,
                            s.key,
                            "" if s.unseen is None else str(s.unseen).lower(),
                            "" if s.metrics.macro_recall is None else repr(s.metrics.macro_recall),
                            "" if s.metrics.micro_recall is None else repr(s.metrics.micro_recall),
                            "" if s.metrics.auroc is None else repr(s.metrics.auroc),
                        ]
                    )
                )
        _write_text(ctx.path(plot_data, is_input=False), "\n".join(rows) + "\n")
    click.echo(f"{name} report -> {output}")


@eval_group.command("agreement")
@click.option("--annotations", "annotations_path", required=True, type=str)
@click.option("--corpus", "corpus_path", required=True, type=str)
@click.option("--output", required=True, type=str)
@click.option("--json", "as_json", is_flag=True)
@pass_ctx
def eval_agreement(ctx, annotations_path, corpus_path, output, as_json):
    """Pairwise rater agreement (kappa, AC1) plus confidence summaries."""
    annotations = evaluation.read_annotations(ctx.path(annotations_path, is_input=True))
    truth = {d.id: d.source_label for d in read_corpus(ctx.path(corpus_path, is_input=True))}
    report = evaluation.agreement_report(annotations, truth)
    config = {"annotations": str(annotations_path), "corpus": str(corpus_path), "seed": ctx.seed}
    out_path = ctx.path(output, is_input=False)
    if as_json:
        payload = report.to_json_obj()
        payload["config"] = config
        _write_text(out_path, _dump_json(payload))
    else:
        text = f"# config: {json.dumps(config, sort_keys=True)}\n" + evaluation.render_agreement_text(report)
        _write_text(out_path, text)
    click.echo(f"agreement report -> {output}")


# ---------------------------------------------------------------------------
# audit


@cli.group()
def audit():
    """Retrieval-based audits."""


@audit.command("bm25")
@click.option("--human", "human_path", required=True, type=str)
@click.option("--synthetic", "synthetic_path", required=True, type=str)
@click.option("--k1", type=float, default=1.2, show_default=True)
@click.option("--b", type=float, default=0.75, show_default=True)
@click.option("--mode", type=click.Choice(["pair", "best"]), default="pair", show_default=True)
@click.option("--output", required=True, type=str)
@click.option("--json", "as_json", is_flag=True)
@pass_ctx
def audit_bm25(ctx, human_path, synthetic_path, k1, b, mode, output, as_json):
    """Seed-regurgitation hit rates by rank range."""
    human = [d for d in read_corpus(ctx.path(human_path, is_input=True)) if d.source_label == HUMAN]
    synthetic = [d for d in read_corpus(ctx.path(synthetic_path, is_input=True)) if d.source_label == SYNTHETIC]
    index = bm25_mod.build_index(human, k1=k1, b=b)
    table = bm25_mod.hit_rate(index, synthetic, mode=mode)
    config = {"k1": k1, "b": b, "mode": mode, "seed": ctx.seed}
    out_path = ctx.path(output, is_input=False)
    if as_json:
        _write_text(out_path, _dump_json({"config": config, "rows": table.to_records(), "total_events": table.total_events}))
    else:
        text = f"# config: {json.dumps(config, sort_keys=True)}\n" + bm25_mod.render_hit_rate_text(table)
        _write_text(out_path, text)
    click.echo(f"hit-rate table -> {output}")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        if exc.ctx is not None:
            click.echo(exc.ctx.get_usage(), err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.exceptions.Abort:
        return 1
    except LyricforgeError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except Exception as exc:  # internal error
        click.echo(f"internal error: {type(exc).__name__}: {exc}", err=True)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
