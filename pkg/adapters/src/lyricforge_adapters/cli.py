"""Command-line entry point: `lyricforge-adapters dump-logprobs|dump-embeddings`."""
from __future__ import annotations

import argparse

from .embed import dump_embeddings
from .logprobs import AdapterConfig, dump_logprobs


def _add_common(parser: argparse.ArgumentParser, default_max_length: int) -> None:
    parser.add_argument("--corpus", required=True, help="corpus JSONL file (canonical form)")
    parser.add_argument("--model", required=True, help="local model directory or hub identifier")
    parser.add_argument("--output", required=True, help="interchange file to write")
    parser.add_argument("--model-name", default=None, help="name recorded in output records")
    parser.add_argument("--batch-size", type=int, default=8)
    parser.add_argument("--max-length", type=int, default=default_max_length)
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--limit", type=int, default=None, help="only process the first N documents")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="lyricforge-adapters", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    _add_common(sub.add_parser("dump-logprobs", help="per-token log-probabilities from a causal LM"), 512)
    _add_common(sub.add_parser("dump-embeddings", help="mean-pooled document embeddings from an encoder"), 256)
    args = parser.parse_args(argv)

    cfg = AdapterConfig(
        model=args.model,
        corpus=args.corpus,
        output=args.output,
        model_name=args.model_name,
        batch_size=args.batch_size,
        max_length=args.max_length,
        device=args.device,
        limit=args.limit,
    )
    if args.command == "dump-logprobs":
        summary = dump_logprobs(cfg)
    else:
        summary = dump_embeddings(cfg)
    print(summary)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
