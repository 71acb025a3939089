"""Evaluation metrics for projection probes.

Each task has one dev/test metric: Spearman rank correlation between
projected pair distances and human similarity scores, triplet ranking
accuracy, or signed-cosine classification accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable

import numpy as np

from .seeds import generator

if TYPE_CHECKING:
    from .probe import CosineSplit, ProbeMatrix, StsSplit, TripletSplit

DEGENERATE_NORM = 1e-12


class ConstantInputError(ValueError):
    """A rank correlation input has zero variance, so the value is undefined."""


@dataclass(frozen=True)
class MetricValue:
    """A metric with its sample size and any skipped degenerate items."""

    kind: str
    value: float
    count: int
    skipped: int = 0


def average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks; tied values share the mean of the ranks they occupy."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        # ranks i+1 .. j+1 are shared by the tied block
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(xs: np.ndarray, ys: np.ndarray) -> float:
    """Spearman rank correlation with average ranks for ties.

    Raises :class:`ConstantInputError` when either input is constant, since
    correlation against a zero-variance vector is undefined.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError(f"inputs must be equal-length vectors, got {xs.shape} and {ys.shape}")
    if len(xs) < 2:
        raise ConstantInputError("need at least 2 observations")
    if np.all(xs == xs[0]) or np.all(ys == ys[0]):
        raise ConstantInputError("rank correlation of a constant input is undefined")
    rx = average_ranks(xs)
    ry = average_ranks(ys)
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    return float(np.dot(rx, ry) / np.sqrt(np.dot(rx, rx) * np.dot(ry, ry)))


def sts_spearman(probe: "ProbeMatrix", split: "StsSplit") -> MetricValue:
    """Spearman between projected pair distances and target distances."""
    diff = split.embeddings[split.left] - split.embeddings[split.right]
    distances = np.linalg.norm(diff @ probe.weights.T, axis=1)
    value = spearman(distances, split.labels)
    return MetricValue(kind="spearman", value=value, count=len(split.labels))


def triplet_accuracy(probe: "ProbeMatrix", split: "TripletSplit") -> MetricValue:
    """Fraction of triples whose entailment lands strictly nearer the premise.

    A tie between the two projected distances counts as a miss.
    """
    w = probe.weights.T
    p = split.embeddings[split.premise] @ w
    e = split.embeddings[split.entailment] @ w
    c = split.embeddings[split.contradiction] @ w
    near = np.linalg.norm(p - e, axis=1)
    far = np.linalg.norm(p - c, axis=1)
    hits = int(np.count_nonzero(near < far))
    return MetricValue(
        kind="triplet_accuracy", value=hits / len(near), count=len(near)
    )


def cosine_accuracy(probe: "ProbeMatrix", split: "CosineSplit") -> MetricValue:
    """Fraction of pairs whose projected cosine sign matches the class.

    Entailment is correct when the cosine is strictly positive,
    contradiction when it is zero or negative. Pairs where either projection
    collapses below :data:`DEGENERATE_NORM` are counted as misses and
    tallied in ``skipped``.
    """
    w = probe.weights.T
    a = split.embeddings[split.left] @ w
    b = split.embeddings[split.right] @ w
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    valid = (na >= DEGENERATE_NORM) & (nb >= DEGENERATE_NORM)
    cos = np.zeros(len(na))
    np.divide(
        np.einsum("ij,ij->i", a, b), na * nb, out=cos, where=valid
    )
    correct = np.where(split.labels > 0, cos > 0.0, cos <= 0.0) & valid
    hits = int(np.count_nonzero(correct))
    skipped = int(np.count_nonzero(~valid))
    return MetricValue(
        kind="cosine_accuracy", value=hits / len(na), count=len(na), skipped=skipped
    )


_METRIC_KINDS = {
    "sts": "spearman",
    "te_triplet": "triplet_accuracy",
    "te_pair": "cosine_accuracy",
}


def metric_kind(task: str) -> str:
    if task not in _METRIC_KINDS:
        raise ValueError(f"unknown task {task!r}")
    return _METRIC_KINDS[task]


def evaluator(task: str) -> Callable[["ProbeMatrix", object], MetricValue]:
    """The dev/test metric function for a task."""
    table = {
        "sts": sts_spearman,
        "te_triplet": triplet_accuracy,
        "te_pair": cosine_accuracy,
    }
    if task not in table:
        raise ValueError(f"unknown task {task!r}")
    return table[task]


def permutation_null_band(
    xs: np.ndarray,
    ys: np.ndarray,
    draws: int = 1000,
    seed: int = 0,
    quantiles: tuple[float, float] = (0.005, 0.995),
) -> tuple[float, float]:
    """Null band for Spearman under random shuffles of ``ys`` against ``xs``.

    Ranks are computed once and permuted, so each draw costs one dot
    product. Returns the requested quantiles of the null distribution.
    """
    rx = average_ranks(np.asarray(xs, dtype=np.float64))
    ry = average_ranks(np.asarray(ys, dtype=np.float64))
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    scale = np.sqrt(np.dot(rx, rx) * np.dot(ry, ry))
    if scale == 0.0:
        raise ConstantInputError("rank correlation of a constant input is undefined")
    rng = generator(seed)
    values = np.empty(draws)
    for i in range(draws):
        values[i] = np.dot(rx, rng.permutation(ry)) / scale
    lo, hi = np.quantile(values, quantiles)
    return float(lo), float(hi)
