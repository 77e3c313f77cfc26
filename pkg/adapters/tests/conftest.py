import json
import random

import pytest
import torch
from tokenizers import Tokenizer, models, pre_tokenizers
from transformers import (
    BertConfig,
    BertModel,
    GPT2Config,
    GPT2LMHeadModel,
    PreTrainedTokenizerFast,
)

WORDS = (
    "love night heart fire dream road home light rain star gold wild free run "
    "away stay close mine yours never always tonight city river shadow broken"
).split()


def build_tokenizer():
    vocab = {"[UNK]": 0, "[BOS]": 1, "[PAD]": 2}
    for word in WORDS:
        vocab[word] = len(vocab)
    tok = Tokenizer(models.WordLevel(vocab, unk_token="[UNK]"))
    tok.pre_tokenizer = pre_tokenizers.Whitespace()
    return PreTrainedTokenizerFast(
        tokenizer_object=tok, unk_token="[UNK]", bos_token="[BOS]", pad_token="[PAD]"
    ), len(vocab)


@pytest.fixture(scope="session")
def causal_model_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("causal-model")
    tokenizer, vocab_size = build_tokenizer()
    torch.manual_seed(7)
    config = GPT2Config(
        vocab_size=vocab_size,
        n_positions=128,
        n_embd=32,
        n_layer=2,
        n_head=2,
        bos_token_id=tokenizer.bos_token_id,
        eos_token_id=tokenizer.bos_token_id,
    )
    model = GPT2LMHeadModel(config)
    tokenizer.save_pretrained(path)
    model.save_pretrained(path)
    return path


@pytest.fixture(scope="session")
def encoder_model_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("encoder-model")
    tokenizer, vocab_size = build_tokenizer()
    torch.manual_seed(11)
    config = BertConfig(
        vocab_size=vocab_size,
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=128,
        pad_token_id=tokenizer.pad_token_id,
    )
    model = BertModel(config)
    tokenizer.save_pretrained(path)
    model.save_pretrained(path)
    return path


@pytest.fixture(scope="session")
def smoke_corpus(tmp_path_factory):
    """Ten canonical-form documents in the corpus interchange format."""
    path = tmp_path_factory.mktemp("corpus") / "smoke.jsonl"
    rng = random.Random(3)
    records = []
    for i in range(10):
        verses = []
        for _ in range(rng.randint(1, 3)):
            lines = [
                " ".join(rng.choice(WORDS) for _ in range(rng.randint(3, 6)))
                for _ in range(rng.randint(2, 3))
            ]
            verses.append("\n".join(lines))
        records.append(
            {
                "id": f"smoke{i:02d}",
                "language": "en",
                "genre": "pop",
                "artist": "smoke artist",
                "label": "human",
                "generator": None,
                "text": "\n\n".join(verses),
                "seed_ids": None,
            }
        )
    # one duplicate text under a different id, for determinism checks
    records.append(dict(records[0], id="smoke-dup"))
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    return path
