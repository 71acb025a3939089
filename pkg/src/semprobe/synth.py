"""Synthetic stores with a planted low-dimensional metric.

Sentences are latent points z in R^k, lifted into R^d by a fixed
column-orthonormal map Q. Each layer mixes signal and noise:

    x = ratio * Q z + (sigma + 1 - ratio) * eps,   eps ~ N(0, I_d)

so ratio 1.0 is a clean lift of the latent geometry and ratio 0.0 carries
no signal at all. Labels are computed from the latent points alone:
similarity scores from latent distances, entailment classes from a latent
half-space with a radial margin. A probe therefore has an exact planted
answer to recover, with a known noise floor per layer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .seeds import generator, mix_seed
from .store import SPLITS, TASKS, write_store_split

_Q_TAG = 0x51
_LATENT_TAG = 0x5A
_LABEL_TAG = 0x70
_NOISE_TAG = 0xE0


@dataclass(frozen=True)
class SynthParams:
    """Shape and difficulty of a generated store.

    ``layer_ratios`` gives the signal fraction of each layer in file order.
    ``train_sentences`` sizes the train split; dev and test each get a
    quarter of that (at least 16). ``class_margin`` pushes entailment
    classes away from the separating hyperplane along the first latent
    coordinate, which bounds the best reachable accuracy away from chance.
    """

    task: str = "sts"
    latent_dim: int = 8
    ambient_dim: int = 256
    train_sentences: int = 2000
    noise_sigma: float = 0.05
    layer_ratios: tuple[float, ...] = (1.0, 0.5, 0.0)
    seed: int = 0
    pairs_per_sentence: int = 8
    class_margin: float = 1.0

    def __post_init__(self) -> None:
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        if not 1 <= self.latent_dim <= self.ambient_dim:
            raise ValueError(
                f"latent dim {self.latent_dim} must lie in [1, {self.ambient_dim}]"
            )
        if self.train_sentences < 4:
            raise ValueError("train_sentences must be at least 4")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        if len(self.layer_ratios) < 2:
            raise ValueError("need at least 2 layers")
        for ratio in self.layer_ratios:
            if not 0.0 <= ratio <= 1.0:
                raise ValueError(f"layer ratio {ratio} outside [0, 1]")
        if self.pairs_per_sentence < 1:
            raise ValueError("pairs_per_sentence must be at least 1")
        if self.class_margin < 0:
            raise ValueError("class_margin must be non-negative")

    @property
    def model_id(self) -> str:
        return (
            f"synthetic/planted-{self.task}-k{self.latent_dim}-d{self.ambient_dim}"
        )


def _split_size(params: SynthParams, split: str) -> int:
    if split == "train":
        return params.train_sentences
    return max(16, params.train_sentences // 4)


def _latent_points(params: SynthParams, split_index: int, count: int) -> np.ndarray:
    rng = generator(mix_seed(params.seed, _LATENT_TAG, split_index))
    z = rng.standard_normal((count, params.latent_dim))
    if params.task != "sts":
        # push each point away from the class boundary along coordinate 0
        side = np.where(z[:, 0] >= 0.0, 1.0, -1.0)
        z[:, 0] = side * (np.abs(z[:, 0]) + params.class_margin)
        # guarantee both classes exist so triples can always be formed
        if np.all(side > 0) or np.all(side < 0):
            z[0, 0] = -z[0, 0]
    return z


def _resample_within(
    rng: np.random.Generator, pool: np.ndarray, picks: np.ndarray, avoid: np.ndarray
) -> np.ndarray:
    """Redraw entries of ``picks`` from ``pool`` until none equals ``avoid``."""
    while True:
        mask = picks == avoid
        if not mask.any():
            return picks
        picks[mask] = pool[rng.integers(0, len(pool), size=int(mask.sum()))]


def _sts_rows(params: SynthParams, z: np.ndarray, rng: np.random.Generator) -> list:
    count = len(z)
    total = count * params.pairs_per_sentence
    left = rng.integers(0, count, size=total)
    right = _resample_within(
        rng, np.arange(count), rng.integers(0, count, size=total), left
    )
    distances = np.linalg.norm(z[left] - z[right], axis=1)
    span = distances.max() - distances.min()
    if span < 1e-12:
        normalized = np.zeros_like(distances)
    else:
        normalized = (distances - distances.min()) / span
    scores = 5.0 * (1.0 - normalized)
    return [(int(a), int(b), str(float(s))) for a, b, s in zip(left, right, scores)]


def _te_rows(params: SynthParams, z: np.ndarray, rng: np.random.Generator) -> list:
    count = len(z)
    total = count * params.pairs_per_sentence
    positive = np.flatnonzero(z[:, 0] > 0)
    negative = np.flatnonzero(z[:, 0] <= 0)
    premise = rng.integers(0, count, size=total)
    same: dict[bool, np.ndarray] = {True: positive, False: negative}
    opposite: dict[bool, np.ndarray] = {True: negative, False: positive}
    rows = []
    if params.task == "te_triplet":
        for side in (True, False):
            lanes = np.flatnonzero((z[premise, 0] > 0) == side)
            pool = same[side]
            entail = pool[rng.integers(0, len(pool), size=len(lanes))]
            entail = _resample_within(rng, pool, entail, premise[lanes])
            contra = opposite[side][
                rng.integers(0, len(opposite[side]), size=len(lanes))
            ]
            for p, e, c in zip(premise[lanes], entail, contra):
                rows.append((int(p), int(e), int(c)))
    else:
        entail_lanes = total // 2
        for lane in range(total):
            p = int(premise[lane])
            side = z[p, 0] > 0
            if lane < entail_lanes:
                pool = same[side]
                pick = int(pool[rng.integers(0, len(pool))])
                while pick == p:
                    pick = int(pool[rng.integers(0, len(pool))])
                rows.append((p, pick, "entailment"))
            else:
                pool = opposite[side]
                rows.append((p, int(pool[rng.integers(0, len(pool))]), "contradiction"))
        for _ in range(total // 20):
            a = int(rng.integers(0, count))
            b = int(rng.integers(0, count))
            while b == a:
                b = int(rng.integers(0, count))
            rows.append((a, b, "neutral"))
    return rows


def generate_store(params: SynthParams, out_dir) -> None:
    """Write a complete train/dev/test store under ``out_dir``.

    The same parameters always produce byte-identical stores: every random
    draw comes from a counter-based stream keyed by (seed, purpose, split,
    layer).
    """
    lift_rng = generator(mix_seed(params.seed, _Q_TAG))
    q, _ = np.linalg.qr(
        lift_rng.standard_normal((params.ambient_dim, params.latent_dim))
    )
    for split_index, split in enumerate(SPLITS):
        count = _split_size(params, split)
        z = _latent_points(params, split_index, count)
        label_rng = generator(mix_seed(params.seed, _LABEL_TAG, split_index))
        if params.task == "sts":
            rows = _sts_rows(params, z, label_rng)
        else:
            rows = _te_rows(params, z, label_rng)
        signal = z @ q.T
        layers = []
        for layer_index, ratio in enumerate(params.layer_ratios):
            noise_rng = generator(
                mix_seed(params.seed, _NOISE_TAG, split_index, layer_index)
            )
            noise = noise_rng.standard_normal((count, params.ambient_dim))
            scale = params.noise_sigma + (1.0 - ratio)
            layers.append((ratio * signal + scale * noise).astype(np.float32))
        write_store_split(
            out_dir,
            task=params.task,
            split=split,
            model_id=params.model_id,
            pooling="mean_tokens",
            layers=layers,
            label_rows=rows,
        )
