"""Command line interface: validate stores, run sweeps, generate data.

``semprobe validate <store>`` checks every file of a store and prints one
status line per file. ``semprobe sweep <run_spec.json> [--jobs N]`` runs a
grid sweep described by a JSON run spec and writes reports; worker count
never changes output bytes. ``semprobe synth`` writes a synthetic store
with a planted latent metric.

Run spec schema (JSON object; unknown fields anywhere are hard errors,
everything except ``store`` and ``output_dir`` has a default):

    {
      "store": "path/to/store",
      "output_dir": "path/to/results",
      "sweep": {"model_id": ..., "task": ..., "dims": [...],
                "layers": [...], "runs": ..., "base_seed": ...},
      "train": {"learning_rate": ..., "max_epochs": ..., "patience": ...,
                "batch_size": ..., "eval_every": ..., "beta1": ...,
                "beta2": ..., "epsilon": ..., "weight_decay": ...}
    }

``dims`` entries are positive integers, optionally ending with the string
``"identity"`` for the unfitted full-dimensional baseline.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .probe import AdamWConfig, TrainConfig
from .report import write_sweep_reports
from .seeds import mix_seed
from .store import EmbeddingStore, StoreError
from .sweep import IDENTITY, ResultGrid, SweepSpec, SweepSpecError, run_sweep
from .synth import SynthParams, generate_store


class RunSpecError(ValueError):
    """A run spec file is malformed or contradicts its store."""


_TOP_KEYS = {"store", "output_dir", "sweep", "train"}
_SWEEP_KEYS = {"model_id", "task", "dims", "layers", "runs", "base_seed"}
_TRAIN_KEYS = {
    "learning_rate",
    "max_epochs",
    "patience",
    "batch_size",
    "eval_every",
    "beta1",
    "beta2",
    "epsilon",
    "weight_decay",
}


def _check_keys(doc: dict, allowed: set[str], context: str) -> None:
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise RunSpecError(f"unknown field(s) in {context}: {', '.join(unknown)}")


def _require_int(doc: dict, key: str, context: str) -> int | None:
    if key not in doc:
        return None
    value = doc[key]
    if not isinstance(value, int) or isinstance(value, bool):
        raise RunSpecError(f"{context}.{key} must be an integer")
    return value


def _require_number(doc: dict, key: str, context: str) -> float | None:
    if key not in doc:
        return None
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise RunSpecError(f"{context}.{key} must be a number")
    return float(value)


def _default_dims(store_dim: int) -> tuple:
    widths = []
    width = 2
    while width <= min(512, store_dim):
        widths.append(width)
        width *= 2
    if store_dim not in widths:
        widths.append(store_dim)
    return tuple(sorted(widths)) + (IDENTITY,)


def _parse_dims(raw: object) -> tuple:
    if not isinstance(raw, list) or not raw:
        raise RunSpecError("sweep.dims must be a non-empty list")
    dims = []
    for entry in raw:
        if entry == IDENTITY:
            dims.append(IDENTITY)
        elif isinstance(entry, int) and not isinstance(entry, bool):
            dims.append(entry)
        else:
            raise RunSpecError(
                f"sweep.dims entries must be integers or {IDENTITY!r}, got {entry!r}"
            )
    return tuple(dims)


def _parse_layers(raw: object) -> tuple[int, ...]:
    if not isinstance(raw, list) or not raw:
        raise RunSpecError("sweep.layers must be a non-empty list")
    for entry in raw:
        if not isinstance(entry, int) or isinstance(entry, bool):
            raise RunSpecError(f"sweep.layers entries must be integers, got {entry!r}")
    return tuple(raw)


def _or_default(value, default):
    return default if value is None else value


def _parse_train(doc: dict, task: str) -> TrainConfig:
    _check_keys(doc, _TRAIN_KEYS, "train")
    defaults_te = task in ("te_triplet", "te_pair")
    patience: int | None
    if "patience" in doc:
        patience = None if doc["patience"] is None else _require_int(doc, "patience", "train")
    else:
        patience = None if defaults_te else 10
    adamw = AdamWConfig(
        beta1=_or_default(_require_number(doc, "beta1", "train"), 0.9),
        beta2=_or_default(_require_number(doc, "beta2", "train"), 0.999),
        epsilon=_or_default(_require_number(doc, "epsilon", "train"), 1e-8),
        weight_decay=_or_default(_require_number(doc, "weight_decay", "train"), 0.01),
    )
    try:
        return TrainConfig(
            loss_kind=task,
            learning_rate=_or_default(
                _require_number(doc, "learning_rate", "train"), 1e-5
            ),
            max_epochs=_or_default(
                _require_int(doc, "max_epochs", "train"), 5 if defaults_te else 300
            ),
            patience=patience,
            batch_size=_or_default(_require_int(doc, "batch_size", "train"), 64),
            eval_every=_or_default(_require_int(doc, "eval_every", "train"), 1),
            adamw=adamw,
            seed=0,
        )
    except ValueError as exc:
        raise RunSpecError(str(exc)) from exc


def load_run_spec(path: Path) -> dict:
    """Read and structurally check a run spec file."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise RunSpecError(f"cannot read run spec {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise RunSpecError("run spec must be a JSON object")
    _check_keys(doc, _TOP_KEYS, "run spec")
    for key in ("store", "output_dir"):
        if key not in doc or not isinstance(doc[key], str):
            raise RunSpecError(f"run spec needs a string field {key!r}")
    for key in ("sweep", "train"):
        if key in doc and not isinstance(doc[key], dict):
            raise RunSpecError(f"run spec field {key!r} must be an object")
    return doc


def resolve_run_spec(doc: dict, store: EmbeddingStore) -> SweepSpec:
    """Fill run spec defaults from the store and build a sweep spec."""
    sweep_doc = doc.get("sweep", {})
    _check_keys(sweep_doc, _SWEEP_KEYS, "sweep")
    task = sweep_doc.get("task", store.task)
    if task != store.task:
        raise RunSpecError(
            f"sweep.task {task!r} does not match store task {store.task!r}"
        )
    model_id = sweep_doc.get("model_id", store.model_id)
    if not isinstance(model_id, str):
        raise RunSpecError("sweep.model_id must be a string")
    dims = (
        _parse_dims(sweep_doc["dims"]) if "dims" in sweep_doc else _default_dims(store.dim)
    )
    layers = (
        _parse_layers(sweep_doc["layers"])
        if "layers" in sweep_doc
        else tuple(range(store.layer_count))
    )
    runs = _or_default(
        _require_int(sweep_doc, "runs", "sweep"), 10 if task == "sts" else 1
    )
    base_seed = _or_default(_require_int(sweep_doc, "base_seed", "sweep"), 0)
    train = _parse_train(doc.get("train", {}), task)
    try:
        return SweepSpec(
            model_id=model_id,
            task=task,
            dims=dims,
            layers=layers,
            runs=runs,
            base_seed=base_seed,
            train=train,
        )
    except SweepSpecError as exc:
        raise RunSpecError(str(exc)) from exc


def _run_meta_document(doc: dict, spec: SweepSpec, grid: ResultGrid) -> dict:
    labels = grid.dim_labels()
    seeds = {}
    for dim_index, label in enumerate(labels):
        for layer in spec.layers:
            seeds[f"{label}/{layer}"] = [
                mix_seed(spec.base_seed, dim_index, layer, run)
                for run in range(spec.runs)
            ]
    return {
        "store": doc["store"],
        "output_dir": doc["output_dir"],
        "model_id": spec.model_id,
        "task": spec.task,
        "metric_kind": grid.metric_kind,
        "dims": list(labels),
        "layers": list(spec.layers),
        "runs": spec.runs,
        "base_seed": spec.base_seed,
        "train": {
            "loss_kind": spec.train.loss_kind,
            "learning_rate": spec.train.learning_rate,
            "max_epochs": spec.train.max_epochs,
            "patience": spec.train.patience,
            "batch_size": spec.train.batch_size,
            "eval_every": spec.train.eval_every,
            "adamw": {
                "beta1": spec.train.adamw.beta1,
                "beta2": spec.train.adamw.beta2,
                "epsilon": spec.train.adamw.epsilon,
                "weight_decay": spec.train.adamw.weight_decay,
            },
        },
        "cell_seeds": seeds,
    }


def cmd_validate(store_path: str) -> int:
    """Check every file of a store; print one line per file."""
    try:
        store = EmbeddingStore(Path(store_path))
    except StoreError as exc:
        print(f"FAIL {store_path}: {exc}", file=sys.stderr)
        return 1
    failures = 0
    for rel_path, ok, detail in store.validate():
        status = "ok" if ok else "FAIL"
        print(f"{status:<4} {rel_path}  {detail}")
        failures += 0 if ok else 1
    if failures:
        print(f"{failures} file(s) failed validation", file=sys.stderr)
        return 1
    return 0


def cmd_sweep(spec_path: str, jobs: int) -> int:
    """Validate the store, run the sweep, and write all reports."""
    try:
        doc = load_run_spec(Path(spec_path))
    except RunSpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    base = Path(spec_path).parent
    store_path = (base / doc["store"]).resolve() if not Path(doc["store"]).is_absolute() else Path(doc["store"])
    output_dir = (base / doc["output_dir"]).resolve() if not Path(doc["output_dir"]).is_absolute() else Path(doc["output_dir"])
    try:
        store = EmbeddingStore(store_path)
        problems = [
            f"{rel}: {detail}" for rel, ok, detail in store.validate() if not ok
        ]
        if problems:
            for problem in problems:
                print(f"error: store validation failed: {problem}", file=sys.stderr)
            return 1
        spec = resolve_run_spec(doc, store)
    except (StoreError, RunSpecError, SweepSpecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    grid = run_sweep(store, spec, jobs=jobs)
    output_dir.mkdir(parents=True, exist_ok=True)
    write_sweep_reports(grid, output_dir)
    meta = _run_meta_document(doc, spec, grid)
    (output_dir / "run_meta.json").write_text(
        json.dumps(meta, indent=2, allow_nan=False) + "\n", encoding="utf-8"
    )
    failed = sum(1 for cell in grid.cells if cell.failed)
    print(f"wrote {output_dir} ({len(grid.cells)} cells, {failed} failed)")
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    """Generate a synthetic store from command line parameters."""
    try:
        ratios = tuple(float(part) for part in args.layers.split(","))
    except ValueError:
        print(f"error: bad --layers value {args.layers!r}", file=sys.stderr)
        return 1
    try:
        params = SynthParams(
            task=args.task,
            latent_dim=args.k,
            ambient_dim=args.d,
            train_sentences=args.n,
            noise_sigma=args.sigma,
            layer_ratios=ratios,
            seed=args.seed,
        )
        generate_store(params, Path(args.out))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(
        f"wrote {args.out} ({params.task}, k={params.latent_dim}, "
        f"d={params.ambient_dim}, layers={len(ratios)})"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semprobe",
        description="Fit linear projection probes over stored sentence embeddings.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="check every file of a store")
    p_validate.add_argument("store", help="store directory")

    p_sweep = sub.add_parser("sweep", help="run a probe sweep from a JSON run spec")
    p_sweep.add_argument("run_spec", help="run spec JSON file")
    p_sweep.add_argument(
        "--jobs", type=int, default=1, help="worker threads (never changes results)"
    )

    p_synth = sub.add_parser("synth", help="generate a synthetic store")
    p_synth.add_argument("--task", default="sts", choices=("sts", "te_triplet", "te_pair"))
    p_synth.add_argument("--k", type=int, default=8, help="latent dim")
    p_synth.add_argument("--d", type=int, default=256, help="embedding dim")
    p_synth.add_argument("--n", type=int, default=2000, help="train sentences")
    p_synth.add_argument("--sigma", type=float, default=0.05, help="noise scale")
    p_synth.add_argument(
        "--layers", default="1.0,0.5,0.0", help="comma-separated signal ratios"
    )
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--out", required=True, help="output store directory")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "validate":
        return cmd_validate(args.store)
    if args.command == "sweep":
        if args.jobs < 1:
            print("error: --jobs must be at least 1", file=sys.stderr)
            return 1
        return cmd_sweep(args.run_spec, args.jobs)
    return cmd_synth(args)


if __name__ == "__main__":
    sys.exit(main())
