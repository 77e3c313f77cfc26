"""Dump per-token log-probabilities from a local causal language model.

One record per document in the TokenLogProbs interchange format. Scoring is
anchored on a BOS token so every real token receives a log-probability, and
the model's own mean loss per document goes into a stats sidecar so
downstream perplexity can be cross-checked against the runtime.
"""
from __future__ import annotations

import json
import sys
from dataclasses import dataclass
from pathlib import Path

import torch
from transformers import AutoModelForCausalLM, AutoTokenizer

from .corpus import CorpusDoc, read_corpus


@dataclass
class AdapterConfig:
    model: str
    corpus: str
    output: str
    model_name: str | None = None
    batch_size: int = 8
    max_length: int = 512
    device: str = "cpu"
    limit: int | None = None

    @property
    def recorded_name(self) -> str:
        return self.model_name or self.model


def _verse_breaks(verse_starts: list[int], offsets: list[tuple[int, int]], doc_id: str) -> list[int]:
    """Map character-level verse starts to token indices.

    A verse break is the first token starting at or after the verse's first
    character; subword tokenizers may straddle the boundary, so "at or after"
    is the contract. Verses lost to truncation get no break (the sidecar
    records the truncation).
    """
    breaks: list[int] = []
    for start_char in verse_starts:
        index = next((i for i, (begin, _) in enumerate(offsets) if begin >= start_char), None)
        if index is None:
            break
        if breaks and index <= breaks[-1]:
            raise ValueError(f"{doc_id}: verse breaks collapsed at token {index}")
        breaks.append(index)
    return breaks


def _score_doc(cfg: AdapterConfig, tokenizer, model, bos_id: int, doc: CorpusDoc):
    encoding = tokenizer(doc.text, return_offsets_mapping=True, add_special_tokens=False)
    ids = encoding["input_ids"]
    offsets = list(encoding["offset_mapping"])
    if not ids:
        raise ValueError(f"{doc.id}: tokenizer produced no tokens")
    total = len(ids)
    budget = cfg.max_length - 1  # one slot for the BOS anchor
    if total > budget:
        ids = ids[:budget]
        offsets = offsets[:budget]
    input_ids = torch.tensor([[bos_id] + ids], device=cfg.device)
    with torch.no_grad():
        output = model(input_ids, labels=input_ids)
        log_probs = torch.log_softmax(output.logits[0, :-1], dim=-1)
        token_lps = log_probs.gather(1, input_ids[0, 1:].unsqueeze(1)).squeeze(1)
    # logits are scored in float32; clamp round-off above zero
    lps = [min(0.0, float(lp)) for lp in token_lps]
    tokens = [[doc.text[begin:end], lp] for (begin, end), lp in zip(offsets, lps)]
    record = {
        "doc_id": doc.id,
        "model": cfg.recorded_name,
        "tokens": tokens,
        "verse_breaks": _verse_breaks(doc.verse_starts, offsets, doc.id),
    }
    stat = {
        "doc_id": doc.id,
        "runtime_mean_nll": float(output.loss),
        "total_tokens": total,
        "kept_tokens": len(ids),
        "truncated": total > len(ids),
    }
    return record, stat


def dump_logprobs(cfg: AdapterConfig) -> dict:
    """Write the dump plus a `.stats.jsonl` sidecar; returns summary counts."""
    tokenizer = AutoTokenizer.from_pretrained(cfg.model)
    model = AutoModelForCausalLM.from_pretrained(cfg.model).to(cfg.device)
    model.eval()
    bos_id = tokenizer.bos_token_id if tokenizer.bos_token_id is not None else tokenizer.eos_token_id
    if bos_id is None:
        raise ValueError("tokenizer defines neither a BOS nor an EOS token to anchor scoring")

    docs = read_corpus(cfg.corpus, limit=cfg.limit)
    out_path = Path(cfg.output)
    stats_path = Path(str(out_path) + ".stats.jsonl")
    truncated = 0
    with open(out_path, "w", encoding="utf-8", newline="\n") as out, open(
        stats_path, "w", encoding="utf-8", newline="\n"
    ) as stats:
        for doc in docs:
            record, stat = _score_doc(cfg, tokenizer, model, bos_id, doc)
            out.write(json.dumps(record, ensure_ascii=False) + "\n")
            stats.write(json.dumps(stat, ensure_ascii=False) + "\n")
            if stat["truncated"]:
                truncated += 1
                print(f"warning: {doc.id} truncated to {stat['kept_tokens']} tokens", file=sys.stderr)
    return {
        "documents": len(docs),
        "truncated": truncated,
        "output": str(out_path),
        "stats": str(stats_path),
    }
