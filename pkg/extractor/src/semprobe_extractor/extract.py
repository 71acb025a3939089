"""Run a transformer over prepared sentences and write embedding stores.

For every split the model is run in inference mode over the interned
sentences in fixed batches, all hidden-state layers are pooled to one
vector per sentence (the embedding layer counts as layer 0), and the
stacked layers are written as one store split through the probe
package's writer, so anything downstream sees an ordinary store.

Pooling follows the architecture class: bidirectional and
encoder-decoder models average token vectors (special and padding
positions excluded; encoder-decoder models contribute encoder states
only), while causal models take the last non-padding token's vector.
Vectors are stored raw, without any normalization.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from semprobe import write_store_split

from .datasets import PreparedSplit
from .plan import ExtractionPlan
from .pooling import last_token_pool, mean_pool

_LOG = logging.getLogger(__name__)


class ArchitectureError(ValueError):
    """The loaded model contradicts the plan's architecture class."""


_CAUSAL_SUFFIXES = ("ForCausalLM", "LMHeadModel")
_ENCODER_SUFFIXES = ("ForMaskedLM", "ForPreTraining", "ForConditionalGeneration")


def check_architecture(plan: ExtractionPlan, config) -> None:
    """Reject plans whose architecture class contradicts the model config.

    Only positive evidence triggers a rejection; configs without
    architecture hints pass through.
    """
    if getattr(config, "is_encoder_decoder", False):
        if plan.architecture_class != "text_to_text":
            raise ArchitectureError(
                f"{plan.model_id} is an encoder-decoder model; the plan says "
                f"{plan.architecture_class!r}"
            )
        return
    if plan.architecture_class == "text_to_text":
        raise ArchitectureError(
            f"{plan.model_id} is not an encoder-decoder model; the plan says "
            "'text_to_text'"
        )
    names = tuple(getattr(config, "architectures", None) or ())
    if not names:
        return
    causal = any(name.endswith(_CAUSAL_SUFFIXES) for name in names)
    bidirectional = any(name.endswith(_ENCODER_SUFFIXES) for name in names)
    if causal and plan.architecture_class != "causal":
        raise ArchitectureError(
            f"{plan.model_id} registers {names}; expected a causal plan"
        )
    if bidirectional and plan.architecture_class == "causal":
        raise ArchitectureError(
            f"{plan.model_id} registers {names}; not a causal model"
        )


@dataclass(frozen=True)
class SplitReport:
    """Counters for one extracted split."""

    split: str
    sentence_count: int
    label_rows: int
    truncated: int
    skipped_unlabeled: int
    skipped_degenerate: int


@dataclass(frozen=True)
class ExtractionReport:
    """What one extraction run produced."""

    model_id: str
    task: str
    pooling: str
    layer_count: int
    dim: int
    splits: tuple[SplitReport, ...]


def _count_truncated(tokenizer, batch: list[str], max_length: int) -> int:
    """How many sentences exceed ``max_length`` before truncation."""
    encoded = tokenizer(batch, padding=False, truncation=False)
    return sum(len(ids) > max_length for ids in encoded["input_ids"])


def _pool_batch(
    plan: ExtractionPlan, model, tokenizer, batch: list[str]
) -> tuple[list[np.ndarray], int]:
    """Run one batch; returns per-layer pooled vectors and truncation count."""
    import torch

    truncated = _count_truncated(tokenizer, batch, plan.max_length)
    inputs = tokenizer(
        batch,
        padding=True,
        truncation=True,
        max_length=plan.max_length,
        return_tensors="pt",
        return_special_tokens_mask=True,
    )
    special = inputs.pop("special_tokens_mask")
    inputs = {key: value.to(plan.device) for key, value in inputs.items()}
    with torch.no_grad():
        if plan.architecture_class == "text_to_text":
            outputs = model.get_encoder()(
                input_ids=inputs["input_ids"],
                attention_mask=inputs["attention_mask"],
                output_hidden_states=True,
            )
        else:
            outputs = model(**inputs, output_hidden_states=True)
    attention = inputs["attention_mask"].cpu().numpy().astype(bool)
    include = attention & ~special.numpy().astype(bool)
    pooled: list[np.ndarray] = []
    for hidden in outputs.hidden_states:
        states = hidden.detach().cpu().numpy().astype(np.float64)
        if plan.pooling == "mean_tokens":
            pooled.append(mean_pool(states, include))
        else:
            pooled.append(last_token_pool(states, attention))
    return pooled, truncated


def extract_split(
    plan: ExtractionPlan, model, tokenizer, prepared: PreparedSplit
) -> SplitReport:
    """Extract and write one split; returns its counters."""
    sentences = list(prepared.sentences)
    layer_parts: list[list[np.ndarray]] = []
    truncated = 0
    for start in range(0, len(sentences), plan.batch_size):
        batch = sentences[start : start + plan.batch_size]
        pooled, batch_truncated = _pool_batch(plan, model, tokenizer, batch)
        truncated += batch_truncated
        if not layer_parts:
            layer_parts = [[] for _ in pooled]
        for index, vectors in enumerate(pooled):
            layer_parts[index].append(vectors)
    layers = [
        np.concatenate(parts, axis=0).astype(np.float32) for parts in layer_parts
    ]
    if truncated:
        _LOG.warning(
            "split %s: %d of %d sentences truncated to %d tokens",
            prepared.split,
            truncated,
            len(sentences),
            plan.max_length,
        )
    write_store_split(
        root=plan.output_dir,
        task=prepared.task,
        split=prepared.split,
        model_id=plan.model_id,
        pooling=plan.pooling,
        layers=layers,
        label_rows=list(prepared.label_rows),
    )
    _LOG.info(
        "split %s: %d sentences, %d layers, dim %d, %d label rows",
        prepared.split,
        len(sentences),
        len(layers),
        layers[0].shape[1],
        len(prepared.label_rows),
    )
    return SplitReport(
        split=prepared.split,
        sentence_count=len(sentences),
        label_rows=len(prepared.label_rows),
        truncated=truncated,
        skipped_unlabeled=prepared.skipped_unlabeled,
        skipped_degenerate=prepared.skipped_degenerate,
    )


def run_extraction(
    plan: ExtractionPlan,
    model,
    tokenizer,
    prepared_splits: dict[str, PreparedSplit],
) -> ExtractionReport:
    """Extract every planned split with an already-loaded model."""
    check_architecture(plan, model.config)
    model.eval()
    reports = []
    for split in plan.splits:
        if split not in prepared_splits:
            raise KeyError(f"no prepared data for split {split!r}")
        reports.append(extract_split(plan, model, tokenizer, prepared_splits[split]))
    first = reports[0]
    layer_count = getattr(model.config, "num_hidden_layers", None)
    if layer_count is None:
        layer_count = model.config.num_layers
    return ExtractionReport(
        model_id=plan.model_id,
        task=prepared_splits[first.split].task,
        pooling=plan.pooling,
        layer_count=layer_count + 1,
        dim=getattr(model.config, "hidden_size", getattr(model.config, "d_model", 0)),
        splits=tuple(reports),
    )


def extract(plan: ExtractionPlan, data_dir) -> ExtractionReport:
    """Load the model from the hub, prepare the dataset, and extract."""
    from transformers import AutoModel, AutoTokenizer

    from .datasets import build_labels

    tokenizer = AutoTokenizer.from_pretrained(plan.model_id)
    model = AutoModel.from_pretrained(plan.model_id)
    model.to(plan.device)
    prepared = build_labels(data_dir, plan.dataset, plan.task, plan.splits)
    return run_extraction(plan, model, tokenizer, prepared)
