from __future__ import annotations

import numpy as np
import pytest

from semprobe import EmbeddingStore, SynthParams, generate_store


@pytest.fixture(scope="session")
def tiny_sts_store(tmp_path_factory) -> EmbeddingStore:
    """A small planted-similarity store shared by fast tests."""
    root = tmp_path_factory.mktemp("tiny_sts") / "store"
    params = SynthParams(
        task="sts",
        latent_dim=4,
        ambient_dim=32,
        train_sentences=120,
        noise_sigma=0.05,
        layer_ratios=(1.0, 0.0),
        seed=7,
        pairs_per_sentence=4,
    )
    generate_store(params, root)
    return EmbeddingStore(root)


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=20240817))
