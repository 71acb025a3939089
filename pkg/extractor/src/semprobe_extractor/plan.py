"""Extraction plans: what to embed, from which checkpoint, into which store.

The architecture class fixes the pooling strategy; it is never chosen
independently. Bidirectional encoders and the encoder stack of
encoder-decoder models use the mean over real (non-special, non-padding)
tokens; causal models use the hidden state of the final non-padding input
token.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

ARCHITECTURES = ("encoder_mlm", "text_to_text", "causal")
DATASETS = ("stsb", "snli", "mnli", "anli")

POOLING_BY_ARCHITECTURE = {
    "encoder_mlm": "mean_tokens",
    "text_to_text": "mean_tokens",
    "causal": "last_token",
}

_DATASET_TASKS = {
    "stsb": ("sts",),
    "snli": ("te_pair", "te_triplet"),
    "mnli": ("te_pair", "te_triplet"),
    "anli": ("te_pair", "te_triplet"),
}


class PlanError(ValueError):
    """An extraction plan is internally inconsistent."""


@dataclass(frozen=True)
class ExtractionPlan:
    """One extraction job: checkpoint, dataset, splits, and output store."""

    model_id: str
    architecture_class: str
    dataset: str
    output_dir: Path
    task: str = ""
    splits: tuple[str, ...] = ("train", "dev", "test")
    batch_size: int = 32
    device: str = "cpu"
    max_length: int = 128

    def __post_init__(self) -> None:
        if self.architecture_class not in ARCHITECTURES:
            raise PlanError(
                f"unknown architecture class {self.architecture_class!r}"
            )
        if self.dataset not in DATASETS:
            raise PlanError(f"unknown dataset {self.dataset!r}")
        task = self.task or _DATASET_TASKS[self.dataset][0]
        if task not in _DATASET_TASKS[self.dataset]:
            raise PlanError(
                f"dataset {self.dataset!r} cannot produce task {task!r}"
            )
        object.__setattr__(self, "task", task)
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        if not self.splits:
            raise PlanError("splits must not be empty")
        for split in self.splits:
            if split not in ("train", "dev", "test"):
                raise PlanError(f"unknown split {split!r}")
        if self.batch_size < 1:
            raise PlanError("batch_size must be at least 1")
        if self.max_length < 1:
            raise PlanError("max_length must be at least 1")

    @property
    def pooling(self) -> str:
        return POOLING_BY_ARCHITECTURE[self.architecture_class]
