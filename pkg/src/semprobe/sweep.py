"""Grid sweeps: fit probes over projection widths, layers, and repeats.

A sweep walks every (dim, layer) cell of a grid, fitting ``runs`` probes
per cell with derived seeds and recording the test metric of each run's
best dev checkpoint. One special width, the identity baseline, evaluates
the unprojected embeddings without any fitting. Cells that fail are
recorded with their error and never abort the sweep.

Results are byte-for-byte reproducible for a given spec and store, whatever
the worker count: layers load one at a time, cells are independent pure
functions of (data, seed), and collection order is fixed at submission.
"""

from __future__ import annotations

import dataclasses
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .metrics import evaluator, metric_kind
from .probe import (
    CosineSplit,
    ProbeMatrix,
    StsSplit,
    TaskSplit,
    TrainConfig,
    TripletSplit,
    fit,
)
from .seeds import mix_seed
from .store import (
    EmbeddingStore,
    LabeledPairSet,
    SPLITS,
    TripletSet,
)

IDENTITY = "identity"


class SweepSpecError(ValueError):
    """A sweep spec is inconsistent with itself or with its store."""


@dataclass(frozen=True)
class SweepSpec:
    """A fully resolved sweep: what to fit, where, and how often.

    ``dims`` holds projection widths in ascending order, optionally
    followed by the :data:`IDENTITY` marker as the last entry. ``train``
    carries the shared hyperparameters; its seed is replaced per cell run.
    """

    model_id: str
    task: str
    dims: tuple
    layers: tuple[int, ...]
    runs: int
    base_seed: int
    train: TrainConfig

    def __post_init__(self) -> None:
        if not self.dims:
            raise SweepSpecError("dims must not be empty")
        widths = [d for d in self.dims if d != IDENTITY]
        if self.dims.count(IDENTITY) > 1:
            raise SweepSpecError("identity baseline listed more than once")
        if IDENTITY in self.dims and self.dims[-1] != IDENTITY:
            raise SweepSpecError("identity baseline must be the last dims entry")
        for width in widths:
            if not isinstance(width, int) or isinstance(width, bool) or width < 1:
                raise SweepSpecError(f"projection width {width!r} must be a positive integer")
        if list(widths) != sorted(set(widths)):
            raise SweepSpecError("projection widths must be strictly ascending")
        if not self.layers:
            raise SweepSpecError("layers must not be empty")
        if list(self.layers) != sorted(set(self.layers)):
            raise SweepSpecError("layers must be strictly ascending")
        if self.layers[0] < 0:
            raise SweepSpecError("layers must be non-negative")
        if self.runs < 1:
            raise SweepSpecError("runs must be at least 1")
        if self.train.loss_kind != self.task:
            raise SweepSpecError(
                f"train loss {self.train.loss_kind!r} does not match task {self.task!r}"
            )


def dim_label(entry, store_dim: int) -> str:
    """Grid row label: the width itself, or the primed store dim for identity."""
    if entry == IDENTITY:
        return f"{store_dim}'"
    return str(entry)


@dataclass(frozen=True)
class RunRecord:
    """One fitted (or identity-evaluated) run inside a cell."""

    run: int
    seed: int
    value: float
    epochs_run: int
    stopped_early: bool


@dataclass(frozen=True)
class CellResult:
    """All runs of one (dim, layer) cell, or the error that failed it."""

    dim: object
    layer: int
    runs: tuple[RunRecord, ...]
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass(frozen=True)
class ResultGrid:
    """Sweep output: per-cell means and spreads plus run metadata.

    ``mean`` and ``std`` are (len(dims), len(layers)) arrays; failed cells
    hold NaN. ``std`` is the population spread over runs, exactly 0.0 for
    single-run cells and for the identity baseline.
    """

    task: str
    metric_kind: str
    model_id: str
    layer_count: int
    store_dim: int
    dims: tuple
    layers: tuple[int, ...]
    runs: int
    mean: np.ndarray
    std: np.ndarray
    cells: tuple[CellResult, ...]

    def dim_labels(self) -> tuple[str, ...]:
        return tuple(dim_label(d, self.store_dim) for d in self.dims)

    def cell(self, dim_index: int, layer_index: int) -> CellResult:
        return self.cells[dim_index * len(self.layers) + layer_index]

    def layer_positions(self) -> tuple[float, ...]:
        """Each swept layer as a fraction of model depth in [0, 1]."""
        top = self.layer_count - 1
        return tuple(layer / top for layer in self.layers)


def _as_task_split(embeddings: np.ndarray, labels) -> TaskSplit:
    data = np.asarray(embeddings, dtype=np.float64)
    if isinstance(labels, TripletSet):
        return TripletSplit(
            embeddings=data,
            premise=labels.premise,
            entailment=labels.entailment,
            contradiction=labels.contradiction,
        )
    if isinstance(labels, LabeledPairSet):
        cls = StsSplit if labels.task == "sts" else CosineSplit
        return cls(
            embeddings=data, left=labels.left, right=labels.right, labels=labels.labels
        )
    raise TypeError(f"unknown label container {type(labels).__name__}")


def load_layer_splits(store: EmbeddingStore, layer: int) -> dict[str, TaskSplit]:
    """Load one layer of all three splits as ready-to-fit task splits."""
    splits = {}
    for name in SPLITS:
        split = store.split(name)
        splits[name] = _as_task_split(split.load_layer(layer).data, split.labels)
    return splits


def _fit_cell_run(
    splits: dict[str, TaskSplit],
    width: int,
    run: int,
    seed: int,
    spec: SweepSpec,
) -> RunRecord:
    config = dataclasses.replace(spec.train, seed=seed)
    evaluate = evaluator(spec.task)
    result = fit(splits["train"], splits["dev"], width, config, evaluate)
    test_value = evaluate(result.best_probe, splits["test"]).value
    return RunRecord(
        run=run,
        seed=seed,
        value=float(test_value),
        epochs_run=result.epochs_run,
        stopped_early=result.stopped_early,
    )


def _identity_cell(
    splits: dict[str, TaskSplit], layer: int, dim_index: int, spec: SweepSpec, store_dim: int
) -> CellResult:
    evaluate = evaluator(spec.task)
    try:
        value = float(evaluate(ProbeMatrix(np.eye(store_dim)), splits["test"]).value)
    except Exception as exc:
        return CellResult(
            dim=IDENTITY, layer=layer, runs=(), error=f"{type(exc).__name__}: {exc}"
        )
    records = tuple(
        RunRecord(
            run=run,
            seed=mix_seed(spec.base_seed, dim_index, layer, run),
            value=value,
            epochs_run=0,
            stopped_early=False,
        )
        for run in range(spec.runs)
    )
    return CellResult(dim=IDENTITY, layer=layer, runs=records)


def resolve_spec(store: EmbeddingStore, spec: SweepSpec) -> SweepSpec:
    """Check a spec against its store and fill the model id if blank."""
    if spec.task != store.task:
        raise SweepSpecError(
            f"spec task {spec.task!r} does not match store task {store.task!r}"
        )
    model_id = spec.model_id or store.model_id
    if model_id != store.model_id:
        raise SweepSpecError(
            f"spec model {model_id!r} does not match store model {store.model_id!r}"
        )
    if spec.layers[-1] >= store.layer_count:
        raise SweepSpecError(
            f"layer {spec.layers[-1]} out of range, store has {store.layer_count} layers"
        )
    for width in spec.dims:
        if width != IDENTITY and width > store.dim:
            raise SweepSpecError(
                f"projection width {width} exceeds embedding dim {store.dim}"
            )
    return dataclasses.replace(spec, model_id=model_id)


def run_sweep(store: EmbeddingStore, spec: SweepSpec, jobs: int = 1) -> ResultGrid:
    """Run every cell of the grid and assemble the result.

    Layers are processed one at a time; within a layer, cell runs execute
    on a worker pool of ``jobs`` threads. Worker count affects wall time
    only, never values: every run is keyed by a seed derived from
    (base seed, dim position, layer, run).
    """
    if jobs < 1:
        raise ValueError("jobs must be at least 1")
    spec = resolve_spec(store, spec)
    cell_map: dict[tuple[int, int], CellResult] = {}

    for layer in spec.layers:
        try:
            splits = load_layer_splits(store, layer)
        except Exception as exc:
            message = f"{type(exc).__name__}: {exc}"
            for dim_index, dim in enumerate(spec.dims):
                cell_map[(dim_index, layer)] = CellResult(
                    dim=dim, layer=layer, runs=(), error=message
                )
            continue
        pending = []
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            for dim_index, dim in enumerate(spec.dims):
                if dim == IDENTITY:
                    continue
                for run in range(spec.runs):
                    seed = mix_seed(spec.base_seed, dim_index, layer, run)
                    future = pool.submit(_fit_cell_run, splits, dim, run, seed, spec)
                    pending.append((dim_index, dim, run, future))
        outcomes: dict[int, list] = {}
        for dim_index, dim, run, future in pending:
            try:
                outcomes.setdefault(dim_index, []).append(future.result())
            except Exception as exc:
                outcomes.setdefault(dim_index, []).append(
                    f"run {run}: {type(exc).__name__}: {exc}"
                )
        for dim_index, dim in enumerate(spec.dims):
            if dim == IDENTITY:
                cell_map[(dim_index, layer)] = _identity_cell(
                    splits, layer, dim_index, spec, store.dim
                )
                continue
            results = outcomes[dim_index]
            errors = [r for r in results if isinstance(r, str)]
            if errors:
                cell_map[(dim_index, layer)] = CellResult(
                    dim=dim, layer=layer, runs=(), error="; ".join(errors)
                )
            else:
                cell_map[(dim_index, layer)] = CellResult(
                    dim=dim, layer=layer, runs=tuple(results)
                )

    mean = np.full((len(spec.dims), len(spec.layers)), np.nan)
    std = np.full_like(mean, np.nan)
    cells = []
    for dim_index, dim in enumerate(spec.dims):
        for layer_index, layer in enumerate(spec.layers):
            cell = cell_map[(dim_index, layer)]
            cells.append(cell)
            if cell.failed:
                continue
            values = [record.value for record in cell.runs]
            if dim == IDENTITY:
                # one evaluation replicated per run, so the spread is zero
                mean[dim_index, layer_index] = values[0]
                std[dim_index, layer_index] = 0.0
            else:
                mean[dim_index, layer_index] = float(np.mean(values))
                std[dim_index, layer_index] = float(np.std(values))
    return ResultGrid(
        task=spec.task,
        metric_kind=metric_kind(spec.task),
        model_id=spec.model_id,
        layer_count=store.layer_count,
        store_dim=store.dim,
        dims=spec.dims,
        layers=spec.layers,
        runs=spec.runs,
        mean=mean,
        std=std,
        cells=tuple(cells),
    )


def collapse_by_layer(grid: ResultGrid) -> tuple[tuple[float, float], ...]:
    """Best cell per layer: (relative position, max over dims) pairs.

    Failed cells are skipped; a layer with no surviving cell yields NaN.
    """
    points = []
    with np.errstate(all="ignore"):
        for layer_index, position in enumerate(grid.layer_positions()):
            column = grid.mean[:, layer_index]
            finite = column[np.isfinite(column)]
            value = float(finite.max()) if len(finite) else float("nan")
            points.append((position, value))
    return tuple(points)


def collapse_by_dim(grid: ResultGrid) -> tuple[tuple[str, float], ...]:
    """Best cell per projection width: (dim label, max over layers) pairs."""
    points = []
    for dim_index, label in enumerate(grid.dim_labels()):
        row = grid.mean[dim_index]
        finite = row[np.isfinite(row)]
        value = float(finite.max()) if len(finite) else float("nan")
        points.append((label, value))
    return tuple(points)
