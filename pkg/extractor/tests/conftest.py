"""Shared fixtures: a stub tokenizer, tiny models, raw dataset trees."""

from __future__ import annotations

import json
from pathlib import Path

import pytest
import torch
from transformers import (
    BertConfig,
    BertModel,
    GPT2Config,
    GPT2Model,
    T5Config,
    T5Model,
)

VOCAB_SIZE = 100
HIDDEN = 32


class WhitespaceTokenizer:
    """Deterministic word-level tokenizer with optional CLS/SEP specials.

    Implements the slice of the tokenizer call protocol the extractor
    uses: batched calls with padding, truncation, tensor conversion, and
    the special-tokens mask. Padding positions are marked special.
    """

    def __init__(self, with_specials: bool = True) -> None:
        self.with_specials = with_specials
        self.pad_id, self.cls_id, self.sep_id = 0, 1, 2

    def word_id(self, word: str) -> int:
        return 3 + sum(word.encode()) % (VOCAB_SIZE - 3)

    def __call__(
        self,
        batch,
        padding=False,
        truncation=False,
        max_length=None,
        return_tensors=None,
        return_special_tokens_mask=False,
    ):
        rows, masks, specials = [], [], []
        for text in batch:
            ids = [self.word_id(word) for word in text.split()]
            spec = [0] * len(ids)
            if self.with_specials:
                ids = [self.cls_id, *ids, self.sep_id]
                spec = [1, *spec, 1]
            if truncation and max_length is not None:
                ids, spec = ids[:max_length], spec[:max_length]
            rows.append(ids)
            masks.append([1] * len(ids))
            specials.append(spec)
        if padding and rows:
            width = max(len(ids) for ids in rows)
            for ids, mask, spec in zip(rows, masks, specials):
                fill = width - len(ids)
                ids.extend([self.pad_id] * fill)
                mask.extend([0] * fill)
                spec.extend([1] * fill)
        out = {"input_ids": rows, "attention_mask": masks}
        if return_special_tokens_mask:
            out["special_tokens_mask"] = specials
        if return_tensors == "pt":
            out = {
                key: torch.tensor(value, dtype=torch.long)
                for key, value in out.items()
            }
        return out


@pytest.fixture(scope="session")
def stub_tokenizer() -> WhitespaceTokenizer:
    return WhitespaceTokenizer(with_specials=True)


@pytest.fixture(scope="session")
def bare_tokenizer() -> WhitespaceTokenizer:
    return WhitespaceTokenizer(with_specials=False)


@pytest.fixture(scope="session")
def tiny_bert() -> BertModel:
    """Two-layer bidirectional encoder; position embeddings zeroed so a
    token's layer-0 vector does not depend on where it sits."""
    torch.manual_seed(11)
    config = BertConfig(
        vocab_size=VOCAB_SIZE,
        hidden_size=HIDDEN,
        num_hidden_layers=2,
        num_attention_heads=4,
        intermediate_size=64,
        max_position_embeddings=64,
    )
    model = BertModel(config)
    with torch.no_grad():
        model.embeddings.position_embeddings.weight.zero_()
    return model.eval()


@pytest.fixture(scope="session")
def tiny_gpt2() -> GPT2Model:
    """Two-layer causal model with zeroed position embeddings."""
    torch.manual_seed(12)
    config = GPT2Config(
        vocab_size=VOCAB_SIZE,
        n_embd=HIDDEN,
        n_layer=2,
        n_head=4,
        n_positions=64,
    )
    model = GPT2Model(config)
    with torch.no_grad():
        model.wpe.weight.zero_()
    return model.eval()


@pytest.fixture(scope="session")
def tiny_t5() -> T5Model:
    """Two-layer encoder-decoder model (relative positions, none to zero)."""
    torch.manual_seed(13)
    config = T5Config(
        vocab_size=VOCAB_SIZE,
        d_model=HIDDEN,
        d_kv=8,
        d_ff=64,
        num_layers=2,
        num_decoder_layers=2,
        num_heads=4,
    )
    model = T5Model(config)
    return model.eval()


_STSB_SENTENCES = [
    "a plane is taking off",
    "an air plane is taking off",
    "a man is playing a large flute",
    "a man is playing a flute",
    "three men are playing chess",
    "two men are playing chess",
    "a man is spreading cheese on a pizza",
    "someone is spreading cheese on an uncooked pizza",
]


def _stsb_line(score: str, left: str, right: str, extra: int = 0) -> str:
    cols = ["main-captions", "MSRvid", "2012test", "0001", score, left, right]
    cols.extend(f"extra{i}" for i in range(extra))
    return "\t".join(cols)


def write_stsb(root: Path) -> Path:
    """Write a small similarity benchmark tree in the official layout."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    s = _STSB_SENTENCES
    train = [
        _stsb_line("5.000", s[0], s[1]),
        _stsb_line("3.800", s[2], s[3]),
        _stsb_line("2.600", s[4], s[5], extra=2),
        _stsb_line("4.250", s[6], s[7]),
        _stsb_line("1.000", s[0], s[4]),
        _stsb_line("0.500", s[2], s[6]),
    ]
    dev = [
        _stsb_line("4.750", s[0], s[1]),
        _stsb_line("3.000", s[2], s[5]),
        _stsb_line("1.200", s[4], s[7]),
    ]
    test = [
        _stsb_line("5.000", s[6], s[7]),
        _stsb_line("2.000", s[1], s[3]),
        _stsb_line("0.000", s[0], s[5]),
    ]
    for split, rows in (("train", train), ("dev", dev), ("test", test)):
        (root / f"sts-{split}.csv").write_text("\n".join(rows) + "\n", "utf-8")
    return root


def _snli_row(label: str, premise: str, hypothesis: str) -> str:
    return json.dumps(
        {"gold_label": label, "sentence1": premise, "sentence2": hypothesis}
    )


def write_snli(root: Path) -> Path:
    """Write a small NLI tree in the public JSON-lines layout.

    The train split covers the interesting shapes: a premise with two
    entailments and one contradiction, one with a single class only, a
    duplicated row, a neutral row, and an unlabeled (``-``) row.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    train = [
        _snli_row("entailment", "a dog runs in the park", "an animal is outside"),
        _snli_row("entailment", "a dog runs in the park", "a dog is moving"),
        _snli_row("contradiction", "a dog runs in the park", "the dog is asleep"),
        _snli_row("neutral", "a dog runs in the park", "the dog chases a ball"),
        _snli_row("entailment", "a child reads a book", "a child is reading"),
        _snli_row("contradiction", "two women cook pasta", "nobody is cooking"),
        _snli_row("entailment", "two women cook pasta", "people prepare food"),
        _snli_row("entailment", "two women cook pasta", "people prepare food"),
        _snli_row("-", "a blurry photo", "impossible to say"),
    ]
    dev = [
        _snli_row("entailment", "a cat sleeps on a mat", "a cat is resting"),
        _snli_row("contradiction", "a cat sleeps on a mat", "the mat is empty"),
        _snli_row("neutral", "a cat sleeps on a mat", "the cat dreams of fish"),
    ]
    test = [
        _snli_row("entailment", "rain falls on the roof", "the roof is getting wet"),
        _snli_row("contradiction", "rain falls on the roof", "the weather is dry"),
    ]
    for split, rows in (("train", train), ("dev", dev), ("test", test)):
        (root / f"snli_1.0_{split}.jsonl").write_text("\n".join(rows) + "\n", "utf-8")
    return root


def write_anli(root: Path) -> Path:
    """Write a small NLI tree in the short-label JSON-lines layout."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    rows = [
        json.dumps({"label": "e", "premise": "the sun is up", "hypothesis": "it is day"}),
        json.dumps({"label": "c", "premise": "the sun is up", "hypothesis": "it is night"}),
        json.dumps({"label": "n", "premise": "the sun is up", "hypothesis": "it is warm"}),
    ]
    for split in ("train", "dev", "test"):
        (root / f"{split}.jsonl").write_text("\n".join(rows) + "\n", "utf-8")
    return root


@pytest.fixture()
def stsb_dir(tmp_path: Path) -> Path:
    return write_stsb(tmp_path / "stsb")


@pytest.fixture()
def snli_dir(tmp_path: Path) -> Path:
    return write_snli(tmp_path / "snli")


@pytest.fixture()
def anli_dir(tmp_path: Path) -> Path:
    return write_anli(tmp_path / "anli")
