"""Command line interface for the extractor.

Two subcommands: ``extract`` runs a hub model over a local dataset copy
and writes an embedding store; ``labels`` runs only the dataset adapter
and writes the interned sentences and label rows for inspection.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .datasets import DatasetError, build_labels, write_label_files
from .plan import ARCHITECTURES, DATASETS, ExtractionPlan, PlanError


def _parse_splits(text: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in text.split(",") if part.strip())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semprobe-extract",
        description="Pool transformer hidden states into embedding stores.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    extract_cmd = commands.add_parser(
        "extract", help="run a model over a dataset and write a store"
    )
    extract_cmd.add_argument("--model", required=True, help="hub model id")
    extract_cmd.add_argument(
        "--arch", required=True, choices=ARCHITECTURES, help="architecture class"
    )
    extract_cmd.add_argument("--dataset", required=True, choices=DATASETS)
    extract_cmd.add_argument(
        "--task", default="", help="label task (defaults to the dataset's primary)"
    )
    extract_cmd.add_argument(
        "--data-dir", required=True, help="directory with the raw dataset files"
    )
    extract_cmd.add_argument("--out", required=True, help="store output directory")
    extract_cmd.add_argument("--splits", default="train,dev,test")
    extract_cmd.add_argument("--batch-size", type=int, default=32)
    extract_cmd.add_argument("--device", default="cpu")
    extract_cmd.add_argument("--max-length", type=int, default=128)

    labels_cmd = commands.add_parser(
        "labels", help="write the prepared sentences and label rows only"
    )
    labels_cmd.add_argument("--dataset", required=True, choices=DATASETS)
    labels_cmd.add_argument("--task", default="")
    labels_cmd.add_argument("--data-dir", required=True)
    labels_cmd.add_argument("--out", required=True)
    labels_cmd.add_argument("--splits", default="train,dev,test")
    return parser


def cmd_extract(args: argparse.Namespace) -> int:
    from .extract import extract

    plan = ExtractionPlan(
        model_id=args.model,
        architecture_class=args.arch,
        dataset=args.dataset,
        output_dir=Path(args.out),
        task=args.task,
        splits=_parse_splits(args.splits),
        batch_size=args.batch_size,
        device=args.device,
        max_length=args.max_length,
    )
    report = extract(plan, Path(args.data_dir))
    print(
        f"wrote {args.out} ({report.layer_count} layers, dim {report.dim}, "
        f"pooling {report.pooling})"
    )
    for split in report.splits:
        print(
            f"  {split.split}: {split.sentence_count} sentences, "
            f"{split.label_rows} label rows, {split.truncated} truncated"
        )
    return 0


def cmd_labels(args: argparse.Namespace) -> int:
    plan = ExtractionPlan(
        model_id="unused/labels-only",
        architecture_class="encoder_mlm",
        dataset=args.dataset,
        output_dir=Path(args.out),
        task=args.task,
        splits=_parse_splits(args.splits),
    )
    prepared = build_labels(Path(args.data_dir), plan.dataset, plan.task, plan.splits)
    for split, data in prepared.items():
        write_label_files(data, Path(args.out) / split)
        print(
            f"  {split}: {len(data.sentences)} sentences, "
            f"{len(data.label_rows)} label rows, "
            f"{data.skipped_unlabeled} unlabeled skipped"
        )
    return 0


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.command == "extract":
            return cmd_extract(args)
        return cmd_labels(args)
    except (PlanError, DatasetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
