"""Dump mean-pooled document embeddings from a local encoder model.

Emits the embedding interchange format: one fixed-dimension vector per
document, mean-pooled over non-padding positions of the last hidden state.
"""
from __future__ import annotations

import json
from pathlib import Path

import torch
from transformers import AutoModel, AutoTokenizer

from .corpus import read_corpus
from .logprobs import AdapterConfig


def dump_embeddings(cfg: AdapterConfig) -> dict:
    tokenizer = AutoTokenizer.from_pretrained(cfg.model)
    model = AutoModel.from_pretrained(cfg.model).to(cfg.device)
    model.eval()

    docs = read_corpus(cfg.corpus, limit=cfg.limit)
    out_path = Path(cfg.output)
    dim = None
    with open(out_path, "w", encoding="utf-8", newline="\n") as out:
        for start in range(0, len(docs), cfg.batch_size):
            batch = docs[start : start + cfg.batch_size]
            encoding = tokenizer(
                [doc.text for doc in batch],
                padding=True,
                truncation=True,
                max_length=cfg.max_length,
                return_tensors="pt",
            ).to(cfg.device)
            with torch.no_grad():
                hidden = model(**encoding).last_hidden_state
            mask = encoding["attention_mask"].unsqueeze(-1).to(hidden.dtype)
            pooled = (hidden * mask).sum(dim=1) / mask.sum(dim=1)
            if dim is None:
                dim = pooled.shape[1]
            elif pooled.shape[1] != dim:
                raise ValueError(f"embedding dimension drifted: {pooled.shape[1]} != {dim}")
            for doc, vector in zip(batch, pooled):
                record = {
                    "doc_id": doc.id,
                    "model": cfg.recorded_name,
                    "dim": int(dim),
                    "vector": [float(v) for v in vector],
                }
                out.write(json.dumps(record, ensure_ascii=False) + "\n")
    return {"documents": len(docs), "dim": int(dim), "output": str(out_path)}
