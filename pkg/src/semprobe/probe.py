"""Projection probes: losses, analytic gradients, AdamW, and training.

A probe is a k x d matrix M applied to fixed sentence embeddings. Training
minimizes one of three losses over M alone:

* similarity pairs: ``(||M(x_i - x_j)|| - l)^2`` against a target distance l
* triples: hinge ``max(0, ||M(p - e)|| - ||M(p - c)||)``
* entailment pairs: ``(cos(Mp, Mh) - t)^2`` with t = +1 or -1

All arithmetic is float64. Norm and hinge kinks use the zero subgradient,
and pairs whose projections collapse below ``DEGENERATE_NORM`` are skipped
by the cosine loss and tallied.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .metrics import DEGENERATE_NORM, MetricValue
from .seeds import generator, mix_seed

_INIT_TAG = 0x01
_SHUFFLE_TAG = 0x02


class DimensionMismatchError(ValueError):
    """Input dim does not match the probe's column count."""


class DegeneratePairError(ValueError):
    """A cosine is requested for a projection with near-zero norm."""


class NonFiniteProbeError(RuntimeError):
    """Probe weights left the finite range during optimization."""


@dataclass(frozen=True)
class ProbeMatrix:
    """A k x d projection matrix, float64."""

    weights: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.weights, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"probe weights must be 2-D, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise NonFiniteProbeError("probe weights contain NaN or Inf")
        object.__setattr__(self, "weights", arr)

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    def project(self, x: np.ndarray) -> np.ndarray:
        """Apply M to a vector or a batch of row vectors."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.in_dim:
            raise DimensionMismatchError(
                f"input dim {x.shape[-1]} does not match probe dim {self.in_dim}"
            )
        return x @ self.weights.T

    def copy(self) -> "ProbeMatrix":
        return ProbeMatrix(self.weights.copy())


def init_probe(out_dim: int, in_dim: int, seed: int) -> ProbeMatrix:
    """Probe with entries uniform on [-1/sqrt(d), +1/sqrt(d)], d = in_dim."""
    if out_dim < 1 or in_dim < 1:
        raise ValueError(f"probe shape ({out_dim}, {in_dim}) must be positive")
    bound = 1.0 / np.sqrt(in_dim)
    weights = generator(seed).uniform(-bound, bound, size=(out_dim, in_dim))
    return ProbeMatrix(weights)


@dataclass(frozen=True)
class StsBatch:
    """Similarity pairs: two embedding blocks and target distances in [0, 1]."""

    left: np.ndarray
    right: np.ndarray
    labels: np.ndarray


@dataclass(frozen=True)
class TripletBatch:
    """Premise / entailment / contradiction embedding blocks."""

    premise: np.ndarray
    entailment: np.ndarray
    contradiction: np.ndarray


@dataclass(frozen=True)
class CosineBatch:
    """Entailment pairs: two embedding blocks and cosine targets of +-1."""

    left: np.ndarray
    right: np.ndarray
    labels: np.ndarray


Batch = Union[StsBatch, TripletBatch, CosineBatch]


@dataclass(frozen=True)
class StsSplit:
    """Similarity pairs indexed into a split's embedding matrix."""

    embeddings: np.ndarray
    left: np.ndarray
    right: np.ndarray
    labels: np.ndarray

    def __len__(self) -> int:
        return len(self.labels)

    def batch(self, indices: np.ndarray) -> StsBatch:
        return StsBatch(
            left=self.embeddings[self.left[indices]],
            right=self.embeddings[self.right[indices]],
            labels=self.labels[indices],
        )


@dataclass(frozen=True)
class TripletSplit:
    """Index triples into a split's embedding matrix."""

    embeddings: np.ndarray
    premise: np.ndarray
    entailment: np.ndarray
    contradiction: np.ndarray

    def __len__(self) -> int:
        return len(self.premise)

    def batch(self, indices: np.ndarray) -> TripletBatch:
        return TripletBatch(
            premise=self.embeddings[self.premise[indices]],
            entailment=self.embeddings[self.entailment[indices]],
            contradiction=self.embeddings[self.contradiction[indices]],
        )


@dataclass(frozen=True)
class CosineSplit:
    """Entailment pairs indexed into a split's embedding matrix."""

    embeddings: np.ndarray
    left: np.ndarray
    right: np.ndarray
    labels: np.ndarray

    def __len__(self) -> int:
        return len(self.labels)

    def batch(self, indices: np.ndarray) -> CosineBatch:
        return CosineBatch(
            left=self.embeddings[self.left[indices]],
            right=self.embeddings[self.right[indices]],
            labels=self.labels[indices],
        )


TaskSplit = Union[StsSplit, TripletSplit, CosineSplit]


def _check_dims(probe: ProbeMatrix, *blocks: np.ndarray) -> None:
    for block in blocks:
        if block.shape[-1] != probe.in_dim:
            raise DimensionMismatchError(
                f"embedding dim {block.shape[-1]} does not match probe dim "
                f"{probe.in_dim}"
            )


def sts_loss(probe: ProbeMatrix, x_i: np.ndarray, x_j: np.ndarray, target: float) -> float:
    """Squared gap between the projected pair distance and its target."""
    u = probe.project(np.asarray(x_i, dtype=np.float64) - np.asarray(x_j, dtype=np.float64))
    return float((np.linalg.norm(u) - target) ** 2)


def triplet_loss(
    probe: ProbeMatrix, premise: np.ndarray, entailment: np.ndarray, contradiction: np.ndarray
) -> float:
    """Hinge on the margin between contradiction and entailment distances."""
    premise = np.asarray(premise, dtype=np.float64)
    near = np.linalg.norm(probe.project(premise - np.asarray(entailment, dtype=np.float64)))
    far = np.linalg.norm(probe.project(premise - np.asarray(contradiction, dtype=np.float64)))
    return float(max(0.0, near - far))


def cosine_pair_loss(
    probe: ProbeMatrix, premise: np.ndarray, hypothesis: np.ndarray, target: float
) -> float:
    """Squared gap between the projected cosine and a +-1 target.

    Raises :class:`DegeneratePairError` when either projection has norm
    below ``DEGENERATE_NORM``; the value is bounded by 4 otherwise.
    """
    a = probe.project(np.asarray(premise, dtype=np.float64))
    b = probe.project(np.asarray(hypothesis, dtype=np.float64))
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na < DEGENERATE_NORM or nb < DEGENERATE_NORM:
        raise DegeneratePairError(
            f"projected norms ({na:.3e}, {nb:.3e}) are too small for a cosine"
        )
    cos = float(np.dot(a, b) / (na * nb))
    return (cos - target) ** 2


def _sts_stats(probe: ProbeMatrix, batch: StsBatch) -> tuple[float, np.ndarray, int]:
    _check_dims(probe, batch.left, batch.right)
    diff = batch.left - batch.right
    u = diff @ probe.weights.T
    norms = np.linalg.norm(u, axis=1)
    residual = norms - batch.labels
    loss = float(np.mean(residual**2))
    # zero subgradient where the projected difference collapses
    active = norms >= DEGENERATE_NORM
    coef = np.where(active, 2.0 * residual / np.maximum(norms, DEGENERATE_NORM), 0.0)
    grad = (u * coef[:, None]).T @ diff / len(norms)
    return loss, grad, 0


def _triplet_stats(
    probe: ProbeMatrix, batch: TripletBatch
) -> tuple[float, np.ndarray, int]:
    _check_dims(probe, batch.premise, batch.entailment, batch.contradiction)
    near_diff = batch.premise - batch.entailment
    far_diff = batch.premise - batch.contradiction
    u_near = near_diff @ probe.weights.T
    u_far = far_diff @ probe.weights.T
    near = np.linalg.norm(u_near, axis=1)
    far = np.linalg.norm(u_far, axis=1)
    margin = near - far
    loss = float(np.mean(np.maximum(margin, 0.0)))
    # hinge active only for a strictly positive margin; ties take the zero
    # subgradient, as do collapsed norms inside an active hinge
    active = margin > 0.0
    coef_near = np.where(active & (near >= DEGENERATE_NORM), 1.0 / np.maximum(near, DEGENERATE_NORM), 0.0)
    coef_far = np.where(active & (far >= DEGENERATE_NORM), 1.0 / np.maximum(far, DEGENERATE_NORM), 0.0)
    grad = (
        (u_near * coef_near[:, None]).T @ near_diff
        - (u_far * coef_far[:, None]).T @ far_diff
    ) / len(margin)
    return loss, grad, 0


def _cosine_stats(
    probe: ProbeMatrix, batch: CosineBatch
) -> tuple[float, np.ndarray, int]:
    _check_dims(probe, batch.left, batch.right)
    a = batch.left @ probe.weights.T
    b = batch.right @ probe.weights.T
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    valid = (na >= DEGENERATE_NORM) & (nb >= DEGENERATE_NORM)
    skipped = int(np.count_nonzero(~valid))
    if not valid.any():
        return 0.0, np.zeros_like(probe.weights), skipped
    a = a[valid]
    b = b[valid]
    na = na[valid]
    nb = nb[valid]
    left = batch.left[valid]
    right = batch.right[valid]
    targets = batch.labels[valid]
    cos = np.einsum("ij,ij->i", a, b) / (na * nb)
    residual = cos - targets
    loss = float(np.mean(residual**2))
    dc_da = b / (na * nb)[:, None] - a * (cos / na**2)[:, None]
    dc_db = a / (na * nb)[:, None] - b * (cos / nb**2)[:, None]
    coef = 2.0 * residual
    grad = (
        (dc_da * coef[:, None]).T @ left + (dc_db * coef[:, None]).T @ right
    ) / len(cos)
    return loss, grad, skipped


def _batch_stats(probe: ProbeMatrix, batch: Batch) -> tuple[float, np.ndarray, int]:
    if isinstance(batch, StsBatch):
        return _sts_stats(probe, batch)
    if isinstance(batch, TripletBatch):
        return _triplet_stats(probe, batch)
    if isinstance(batch, CosineBatch):
        return _cosine_stats(probe, batch)
    raise TypeError(f"unknown batch type {type(batch).__name__}")


def batch_loss(probe: ProbeMatrix, batch: Batch) -> float:
    """Mean loss over a batch; degenerate cosine pairs are excluded."""
    loss, _, _ = _batch_stats(probe, batch)
    return loss


def loss_gradient(probe: ProbeMatrix, batch: Batch) -> np.ndarray:
    """Analytic gradient of the mean batch loss with respect to the probe."""
    _, grad, _ = _batch_stats(probe, batch)
    return grad


@dataclass(frozen=True)
class AdamWConfig:
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    weight_decay: float = 0.01


@dataclass
class AdamWState:
    """First and second moment accumulators plus the step counter."""

    m: np.ndarray
    v: np.ndarray
    step: int = 0

    @classmethod
    def zeros(cls, shape: tuple[int, int]) -> "AdamWState":
        return cls(m=np.zeros(shape), v=np.zeros(shape), step=0)


def adamw_step(
    probe: ProbeMatrix, gradient: np.ndarray, state: AdamWState, config: "TrainConfig"
) -> ProbeMatrix:
    """One AdamW update: bias-corrected moments plus decoupled weight decay.

    Returns the updated probe and mutates ``state`` in place. Raises
    :class:`NonFiniteProbeError` if the update produces NaN or Inf weights.
    """
    opt = config.adamw
    state.step += 1
    state.m = opt.beta1 * state.m + (1.0 - opt.beta1) * gradient
    state.v = opt.beta2 * state.v + (1.0 - opt.beta2) * gradient**2
    m_hat = state.m / (1.0 - opt.beta1**state.step)
    v_hat = state.v / (1.0 - opt.beta2**state.step)
    with np.errstate(over="ignore", invalid="ignore"):
        weights = probe.weights - config.learning_rate * (
            m_hat / (np.sqrt(v_hat) + opt.epsilon) + opt.weight_decay * probe.weights
        )
    if not np.isfinite(weights).all():
        raise NonFiniteProbeError(
            f"weights became non-finite at optimizer step {state.step}"
        )
    return ProbeMatrix(weights)


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for one probe fit.

    ``patience`` selects the schedule: a positive value early-stops after
    that many consecutive dev evaluations without strict improvement, and
    ``None`` runs exactly ``max_epochs`` epochs, keeping the best dev
    checkpoint either way.
    """

    loss_kind: str
    learning_rate: float = 1e-5
    max_epochs: int = 300
    patience: int | None = 10
    batch_size: int = 64
    seed: int = 0
    adamw: AdamWConfig = field(default_factory=AdamWConfig)
    eval_every: int = 1

    def __post_init__(self) -> None:
        if self.loss_kind not in ("sts", "te_triplet", "te_pair"):
            raise ValueError(f"unknown loss kind {self.loss_kind!r}")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be at least 1")
        if self.patience is not None and self.patience < 1:
            raise ValueError("patience must be at least 1 when set")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.eval_every < 1:
            raise ValueError("eval_every must be at least 1")


@dataclass(frozen=True)
class FitResult:
    """Outcome of one fit: best checkpoint, its dev metric, and the trace."""

    best_probe: ProbeMatrix
    best_dev_metric: float
    epochs_run: int
    dev_history: tuple[tuple[int, float], ...]
    stopped_early: bool
    degenerate_pairs: int = 0


EvalFn = Callable[[ProbeMatrix, TaskSplit], "MetricValue | float"]


def _metric_float(value: "MetricValue | float") -> float:
    if isinstance(value, MetricValue):
        return float(value.value)
    return float(value)


def fit(
    train: TaskSplit,
    dev: TaskSplit,
    out_dim: int,
    config: TrainConfig,
    eval_fn: EvalFn,
) -> FitResult:
    """Train a probe of ``out_dim`` rows on ``train``, selecting on ``dev``.

    Each epoch shuffles the training items with a counter-based generator
    keyed by ``config.seed``, walks them in mini-batches (indices sorted
    within each batch so accumulation order is fixed), and applies one
    AdamW step per batch. The dev metric is computed every ``eval_every``
    epochs and after the final epoch; improvement means strictly greater.
    """
    if len(train) == 0:
        raise ValueError("training split is empty")
    d = train.embeddings.shape[1]
    probe = init_probe(out_dim, d, mix_seed(config.seed, _INIT_TAG))
    state = AdamWState.zeros(probe.weights.shape)
    shuffle_rng = generator(mix_seed(config.seed, _SHUFFLE_TAG))

    best_probe = probe.copy()
    best_metric = -np.inf
    history: list[tuple[int, float]] = []
    bad_evals = 0
    stopped_early = False
    degenerate = 0
    epochs_run = 0
    count = len(train)

    for epoch in range(1, config.max_epochs + 1):
        order = shuffle_rng.permutation(count)
        for start in range(0, count, config.batch_size):
            indices = np.sort(order[start : start + config.batch_size])
            _, grad, skipped = _batch_stats(probe, train.batch(indices))
            degenerate += skipped
            probe = adamw_step(probe, grad, state, config)
        epochs_run = epoch
        if epoch % config.eval_every and epoch != config.max_epochs:
            continue
        metric = _metric_float(eval_fn(probe, dev))
        history.append((epoch, metric))
        if metric > best_metric:
            best_metric = metric
            best_probe = probe.copy()
            bad_evals = 0
        else:
            bad_evals += 1
            if config.patience is not None and bad_evals >= config.patience:
                stopped_early = True
                break

    return FitResult(
        best_probe=best_probe,
        best_dev_metric=float(best_metric),
        epochs_run=epochs_run,
        dev_history=tuple(history),
        stopped_early=stopped_early,
        degenerate_pairs=degenerate,
    )
