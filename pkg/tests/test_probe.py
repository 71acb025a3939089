from __future__ import annotations

import numpy as np
import pytest

from semprobe import (
    AdamWConfig,
    AdamWState,
    CosineBatch,
    CosineSplit,
    DegeneratePairError,
    DimensionMismatchError,
    NonFiniteProbeError,
    ProbeMatrix,
    StsBatch,
    StsSplit,
    TrainConfig,
    TripletBatch,
    adamw_step,
    batch_loss,
    cosine_pair_loss,
    fit,
    init_probe,
    loss_gradient,
    sts_loss,
    triplet_loss,
)


def test_init_probe_bounds_and_determinism():
    probe = init_probe(16, 64, seed=3)
    bound = 1.0 / np.sqrt(64)
    assert probe.weights.shape == (16, 64)
    assert np.all(np.abs(probe.weights) <= bound)
    assert np.array_equal(probe.weights, init_probe(16, 64, seed=3).weights)
    assert not np.array_equal(probe.weights, init_probe(16, 64, seed=4).weights)


def test_init_probe_golden_draws():
    # frozen counter-based draws; a generator change would break stored runs
    expected = np.array(
        [
            [0.14638019, 0.2742676, 0.28643626, -0.34040332],
            [-0.33905718, 0.31837857, 0.41741158, -0.43709354],
        ]
    )
    np.testing.assert_allclose(init_probe(2, 4, seed=12345).weights, expected, atol=1e-8)


def test_project_checks_dim():
    probe = ProbeMatrix(np.ones((2, 3)))
    with pytest.raises(DimensionMismatchError):
        probe.project(np.ones(4))


def test_probe_rejects_non_finite():
    with pytest.raises(NonFiniteProbeError):
        ProbeMatrix(np.array([[np.nan, 1.0]]))


def test_sts_loss_and_gradient_hand_example():
    # M = [2], pair difference 1, target 0: loss (2-0)^2 = 4, gradient 2*2*1*1 = 4
    probe = ProbeMatrix(np.array([[2.0]]))
    assert sts_loss(probe, np.array([1.0]), np.array([0.0]), 0.0) == pytest.approx(4.0)
    batch = StsBatch(
        left=np.array([[1.0]]), right=np.array([[0.0]]), labels=np.array([0.0])
    )
    np.testing.assert_allclose(loss_gradient(probe, batch), [[4.0]])


def test_triplet_loss_hinge():
    probe = ProbeMatrix(np.array([[1.0]]))
    p, e, c = np.array([0.0]), np.array([3.0]), np.array([1.0])
    # near 3, far 1: margin 2 is the loss
    assert triplet_loss(probe, p, e, c) == pytest.approx(2.0)
    # swapped roles: margin is negative, hinge clips to zero
    assert triplet_loss(probe, p, c, e) == 0.0


def test_triplet_gradient_zero_when_inactive():
    probe = ProbeMatrix(np.array([[1.0, 0.0]]))
    batch = TripletBatch(
        premise=np.array([[0.0, 0.0]]),
        entailment=np.array([[1.0, 0.0]]),
        contradiction=np.array([[5.0, 0.0]]),
    )
    np.testing.assert_array_equal(loss_gradient(probe, batch), [[0.0, 0.0]])


def test_cosine_pair_loss_bounds():
    probe = ProbeMatrix(np.eye(2))
    a, b = np.array([1.0, 0.0]), np.array([-2.0, 0.0])
    # opposite directions against target +1: (cos - 1)^2 = 4, the maximum
    assert cosine_pair_loss(probe, a, b, 1.0) == pytest.approx(4.0)
    assert cosine_pair_loss(probe, a, b, -1.0) == pytest.approx(0.0)


def test_cosine_pair_loss_degenerate():
    probe = ProbeMatrix(np.array([[1.0, 0.0]]))
    with pytest.raises(DegeneratePairError):
        cosine_pair_loss(probe, np.array([0.0, 5.0]), np.array([1.0, 0.0]), 1.0)


def test_batch_loss_is_mean_of_pair_losses(rng):
    probe = ProbeMatrix(rng.standard_normal((3, 6)))
    left = rng.standard_normal((8, 6))
    right = rng.standard_normal((8, 6))
    labels = rng.uniform(0, 1, 8)
    batch = StsBatch(left=left, right=right, labels=labels)
    single = [sts_loss(probe, left[i], right[i], labels[i]) for i in range(8)]
    assert batch_loss(probe, batch) == pytest.approx(np.mean(single))


def _finite_difference(probe, batch, step=1e-6):
    grad = np.zeros_like(probe.weights)
    for i in range(grad.shape[0]):
        for j in range(grad.shape[1]):
            up = probe.weights.copy()
            down = probe.weights.copy()
            up[i, j] += step
            down[i, j] -= step
            grad[i, j] = (
                batch_loss(ProbeMatrix(up), batch) - batch_loss(ProbeMatrix(down), batch)
            ) / (2 * step)
    return grad


def _random_batch(rng, kind, count=5, dim=6):
    if kind == "sts":
        return StsBatch(
            left=rng.standard_normal((count, dim)),
            right=rng.standard_normal((count, dim)),
            labels=rng.uniform(0, 1, count),
        )
    if kind == "te_triplet":
        return TripletBatch(
            premise=rng.standard_normal((count, dim)),
            entailment=rng.standard_normal((count, dim)),
            contradiction=rng.standard_normal((count, dim)),
        )
    return CosineBatch(
        left=rng.standard_normal((count, dim)),
        right=rng.standard_normal((count, dim)),
        labels=rng.choice([-1.0, 1.0], count),
    )


@pytest.mark.parametrize("kind", ["sts", "te_triplet", "te_pair"])
def test_gradient_matches_finite_differences(kind, rng):
    for _ in range(5):
        probe = ProbeMatrix(rng.standard_normal((3, 6)))
        batch = _random_batch(rng, kind)
        analytic = loss_gradient(probe, batch)
        numeric = _finite_difference(probe, batch)
        np.testing.assert_allclose(analytic, numeric, rtol=1e-4, atol=1e-7)


def test_adamw_matches_torch_reference(rng):
    torch = pytest.importorskip("torch")
    config = TrainConfig(loss_kind="sts", learning_rate=0.01)
    weights = rng.standard_normal((4, 7))
    gradients = [rng.standard_normal((4, 7)) for _ in range(12)]

    param = torch.nn.Parameter(torch.tensor(weights, dtype=torch.float64))
    reference = torch.optim.AdamW(
        [param], lr=0.01, betas=(0.9, 0.999), eps=1e-8, weight_decay=0.01
    )
    probe = ProbeMatrix(weights.copy())
    state = AdamWState.zeros(weights.shape)
    for grad in gradients:
        param.grad = torch.tensor(grad, dtype=torch.float64)
        reference.step()
        probe = adamw_step(probe, grad, state, config)
    np.testing.assert_allclose(probe.weights, param.detach().numpy(), atol=1e-12)
    assert state.step == 12


def test_adamw_weight_decay_decoupled():
    # zero gradient: only the decay term moves the weights
    config = TrainConfig(loss_kind="sts", learning_rate=0.1)
    probe = ProbeMatrix(np.full((2, 2), 10.0))
    state = AdamWState.zeros((2, 2))
    probe = adamw_step(probe, np.zeros((2, 2)), state, config)
    np.testing.assert_allclose(probe.weights, 10.0 * (1 - 0.1 * 0.01))


def test_adamw_detects_non_finite():
    config = TrainConfig(loss_kind="sts", learning_rate=1e10)
    probe = ProbeMatrix(np.full((1, 1), 1e308))
    state = AdamWState.zeros((1, 1))
    with pytest.raises(NonFiniteProbeError, match="step 1"):
        adamw_step(probe, np.zeros((1, 1)), state, config)


def _toy_split(rng, pairs=12, dim=4):
    embeddings = rng.standard_normal((8, dim))
    return StsSplit(
        embeddings=embeddings,
        left=rng.integers(0, 8, pairs),
        right=rng.integers(0, 8, pairs),
        labels=rng.uniform(0, 1, pairs),
    )


def test_fit_fixed_epochs_keeps_best_checkpoint(rng):
    train = _toy_split(rng)
    dev = _toy_split(rng)
    scripted = iter([0.2, 0.9, 0.4, 0.1, 0.3])
    snapshots = []

    def eval_fn(probe, split):
        snapshots.append(probe.weights.copy())
        return next(scripted)

    config = TrainConfig(
        loss_kind="sts", learning_rate=0.05, max_epochs=5, patience=None, seed=1
    )
    result = fit(train, dev, 2, config, eval_fn)
    assert result.epochs_run == 5
    assert not result.stopped_early
    assert result.best_dev_metric == pytest.approx(0.9)
    assert [round(v, 2) for _, v in result.dev_history] == [0.2, 0.9, 0.4, 0.1, 0.3]
    np.testing.assert_array_equal(result.best_probe.weights, snapshots[1])


def test_fit_early_stops_on_flat_metric(rng):
    train = _toy_split(rng)
    dev = _toy_split(rng)
    config = TrainConfig(
        loss_kind="sts", learning_rate=0.05, max_epochs=300, patience=10, seed=1
    )
    result = fit(train, dev, 2, config, lambda probe, split: 0.5)
    assert result.epochs_run == 11
    assert result.stopped_early
    assert len(result.dev_history) == 11


def test_fit_eval_every_and_final_epoch(rng):
    train = _toy_split(rng)
    dev = _toy_split(rng)
    config = TrainConfig(
        loss_kind="sts",
        learning_rate=0.05,
        max_epochs=7,
        patience=None,
        eval_every=3,
        seed=1,
    )
    result = fit(train, dev, 2, config, lambda probe, split: 0.5)
    assert [epoch for epoch, _ in result.dev_history] == [3, 6, 7]


def test_fit_is_deterministic(rng):
    train = _toy_split(rng)
    dev = _toy_split(rng)
    config = TrainConfig(
        loss_kind="sts", learning_rate=0.05, max_epochs=6, patience=None, seed=42
    )

    def eval_fn(probe, split):
        diff = split.embeddings[split.left] - split.embeddings[split.right]
        return -float(np.mean(np.linalg.norm(probe.project(diff), axis=1)))

    first = fit(train, dev, 3, config, eval_fn)
    second = fit(train, dev, 3, config, eval_fn)
    assert first.best_probe.weights.tobytes() == second.best_probe.weights.tobytes()
    assert first.dev_history == second.dev_history


def test_fit_counts_degenerate_pairs(rng):
    # the zero sentence projects to the zero vector for any probe
    embeddings = rng.standard_normal((6, 4))
    embeddings[0] = 0.0
    split = CosineSplit(
        embeddings=embeddings,
        left=np.array([0, 1, 2]),
        right=np.array([3, 4, 5]),
        labels=np.array([1.0, -1.0, 1.0]),
    )
    config = TrainConfig(
        loss_kind="te_pair", learning_rate=0.01, max_epochs=4, patience=None, seed=0
    )
    result = fit(split, split, 2, config, lambda probe, s: 0.5)
    assert result.degenerate_pairs == 4
