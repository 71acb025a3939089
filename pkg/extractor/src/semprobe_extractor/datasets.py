"""Dataset adapters: raw benchmark files to sentences plus label rows.

Each adapter reads one split of a public dataset from a local directory,
interns every distinct sentence string once (first-seen order), and emits
label rows over sentence indices in the layout the store loader expects:

* similarity: ``left  right  raw_score`` with the 0-5 score kept verbatim
* entailment pairs: ``premise  hypothesis  class`` with neutral rows kept
  (the loader drops and counts them, keeping the drop auditable)
* triples: ``premise  entailment  contradiction``, built per premise as
  the cross product of its entailment and contradiction hypotheses,
  deduplicated on the index triple

Supported raw formats: the STS benchmark tab-separated distribution and
the SNLI / MultiNLI / ANLI JSON lines distributions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


class DatasetError(ValueError):
    """A raw dataset file is missing or malformed."""


@dataclass(frozen=True)
class PreparedSplit:
    """One split ready for extraction: sentences and index-based labels."""

    task: str
    split: str
    sentences: tuple[str, ...]
    label_rows: tuple[tuple, ...]
    skipped_unlabeled: int = 0
    skipped_degenerate: int = 0


_FILE_CANDIDATES = {
    "stsb": {
        "train": ("sts-train.csv", "sts-train.tsv", "train.tsv"),
        "dev": ("sts-dev.csv", "sts-dev.tsv", "dev.tsv"),
        "test": ("sts-test.csv", "sts-test.tsv", "test.tsv"),
    },
    "snli": {
        "train": ("snli_1.0_train.jsonl", "train.jsonl"),
        "dev": ("snli_1.0_dev.jsonl", "dev.jsonl"),
        "test": ("snli_1.0_test.jsonl", "test.jsonl"),
    },
    # MultiNLI has no public labeled test split; the mismatched dev set
    # stands in for test, the matched one for dev
    "mnli": {
        "train": ("multinli_1.0_train.jsonl", "train.jsonl"),
        "dev": ("multinli_1.0_dev_matched.jsonl", "dev_matched.jsonl", "dev.jsonl"),
        "test": (
            "multinli_1.0_dev_mismatched.jsonl",
            "dev_mismatched.jsonl",
            "test.jsonl",
        ),
    },
    "anli": {
        "train": ("train.jsonl",),
        "dev": ("dev.jsonl",),
        "test": ("test.jsonl",),
    },
}

_NLI_CLASSES = {
    "entailment": "entailment",
    "neutral": "neutral",
    "contradiction": "contradiction",
    "e": "entailment",
    "n": "neutral",
    "c": "contradiction",
}


def _locate(data_dir: Path, dataset: str, split: str) -> Path:
    candidates = _FILE_CANDIDATES[dataset][split]
    for name in candidates:
        path = Path(data_dir) / name
        if path.is_file():
            return path
    raise DatasetError(
        f"{dataset} split {split!r} not found under {data_dir}; "
        f"tried {', '.join(candidates)}"
    )


class _SentenceInterner:
    """Assigns each distinct sentence one index, in first-seen order."""

    def __init__(self) -> None:
        self._index: dict[str, int] = {}

    def add(self, sentence: str) -> int:
        if sentence not in self._index:
            self._index[sentence] = len(self._index)
        return self._index[sentence]

    def sentences(self) -> tuple[str, ...]:
        return tuple(self._index)


def _read_nli_rows(path: Path) -> tuple[list[tuple[str, str, str]], int]:
    """Parse JSON lines into (premise, hypothesis, class) rows.

    Rows without a gold consensus (label ``-``) are skipped and counted.
    """
    rows: list[tuple[str, str, str]] = []
    skipped = 0
    for line_no, line in enumerate(
        path.read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"{path.name} line {line_no}: bad JSON: {exc}") from exc
        label = doc.get("gold_label", doc.get("label"))
        premise = doc.get("sentence1", doc.get("premise"))
        hypothesis = doc.get("sentence2", doc.get("hypothesis"))
        if label is None or premise is None or hypothesis is None:
            raise DatasetError(
                f"{path.name} line {line_no}: missing label or sentence fields"
            )
        if label == "-":
            skipped += 1
            continue
        if label not in _NLI_CLASSES:
            raise DatasetError(f"{path.name} line {line_no}: unknown label {label!r}")
        rows.append((premise, hypothesis, _NLI_CLASSES[label]))
    if not rows:
        raise DatasetError(f"{path.name}: no labeled rows")
    return rows, skipped


def prepare_stsb(data_dir: Path, split: str) -> PreparedSplit:
    """Load one STS benchmark split, keeping scores verbatim."""
    path = _locate(data_dir, "stsb", split)
    interner = _SentenceInterner()
    rows: list[tuple] = []
    for line_no, line in enumerate(
        path.read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) < 7:
            raise DatasetError(
                f"{path.name} line {line_no}: expected at least 7 columns, "
                f"got {len(parts)}"
            )
        raw_score = parts[4]
        try:
            score = float(raw_score)
        except ValueError as exc:
            raise DatasetError(
                f"{path.name} line {line_no}: bad score {raw_score!r}"
            ) from exc
        if not 0.0 <= score <= 5.0:
            raise DatasetError(
                f"{path.name} line {line_no}: score {score} outside [0, 5]"
            )
        left = interner.add(parts[5])
        right = interner.add(parts[6])
        rows.append((left, right, raw_score))
    if not rows:
        raise DatasetError(f"{path.name}: no rows")
    return PreparedSplit(
        task="sts",
        split=split,
        sentences=interner.sentences(),
        label_rows=tuple(rows),
    )


def prepare_nli_pairs(data_dir: Path, dataset: str, split: str) -> PreparedSplit:
    """Load one NLI split as labeled pairs, neutral rows included."""
    path = _locate(data_dir, dataset, split)
    raw_rows, skipped = _read_nli_rows(path)
    interner = _SentenceInterner()
    rows = [
        (interner.add(premise), interner.add(hypothesis), label)
        for premise, hypothesis, label in raw_rows
    ]
    return PreparedSplit(
        task="te_pair",
        split=split,
        sentences=interner.sentences(),
        label_rows=tuple(rows),
        skipped_unlabeled=skipped,
    )


def prepare_nli_triplets(data_dir: Path, dataset: str, split: str) -> PreparedSplit:
    """Build premise-grouped triples from one NLI split.

    Hypotheses are grouped by exact premise string; every (entailment,
    contradiction) combination yields one triple. Triples that repeat an
    index pair (listed under both classes, or equal to the premise) cannot
    satisfy the loader's distinctness rule and are skipped, tallied in
    ``skipped_degenerate``.
    """
    path = _locate(data_dir, dataset, split)
    raw_rows, skipped = _read_nli_rows(path)
    interner = _SentenceInterner()
    by_premise: dict[int, dict[str, list[int]]] = {}
    order: list[int] = []
    for premise, hypothesis, label in raw_rows:
        premise_id = interner.add(premise)
        hypothesis_id = interner.add(hypothesis)
        if premise_id not in by_premise:
            by_premise[premise_id] = {"entailment": [], "contradiction": []}
            order.append(premise_id)
        if label != "neutral":
            by_premise[premise_id][label].append(hypothesis_id)
    rows: list[tuple[int, int, int]] = []
    seen: set[tuple[int, int, int]] = set()
    degenerate = 0
    for premise_id in order:
        group = by_premise[premise_id]
        for entail_id in group["entailment"]:
            for contra_id in group["contradiction"]:
                triple = (premise_id, entail_id, contra_id)
                if triple in seen:
                    continue
                seen.add(triple)
                if len({premise_id, entail_id, contra_id}) != 3:
                    degenerate += 1
                    continue
                rows.append(triple)
    if not rows:
        raise DatasetError(f"{path.name}: no premise has both classes")
    return PreparedSplit(
        task="te_triplet",
        split=split,
        sentences=interner.sentences(),
        label_rows=tuple(rows),
        skipped_unlabeled=skipped,
        skipped_degenerate=degenerate,
    )


def prepare_split(
    data_dir: Path, dataset: str, task: str, split: str
) -> PreparedSplit:
    """Dispatch to the right adapter for (dataset, task)."""
    if dataset == "stsb":
        if task != "sts":
            raise DatasetError(f"stsb produces task 'sts', not {task!r}")
        return prepare_stsb(data_dir, split)
    if task == "te_pair":
        return prepare_nli_pairs(data_dir, dataset, split)
    if task == "te_triplet":
        return prepare_nli_triplets(data_dir, dataset, split)
    raise DatasetError(f"dataset {dataset!r} cannot produce task {task!r}")


def build_labels(
    data_dir: Path, dataset: str, task: str, splits: tuple[str, ...]
) -> dict[str, PreparedSplit]:
    """Prepare every requested split of a dataset."""
    return {
        split: prepare_split(Path(data_dir), dataset, task, split)
        for split in splits
    }


def write_label_files(prepared: PreparedSplit, out_dir: Path) -> None:
    """Write one split's sentences and labels for offline inspection."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "sentences.txt").write_text(
        "\n".join(prepared.sentences) + "\n", encoding="utf-8"
    )
    lines = ["\t".join(str(col) for col in row) for row in prepared.label_rows]
    (out_dir / "labels.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
