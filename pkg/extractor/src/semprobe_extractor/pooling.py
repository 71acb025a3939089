"""Pooling of token hidden states into one vector per sentence.

Both functions take a (batch, tokens, dim) array of hidden states from one
layer and return a (batch, dim) array, in float64 so later casts to the
storage dtype round once.
"""

from __future__ import annotations

import numpy as np


class PoolingError(ValueError):
    """No tokens are available to pool for some sentence."""


def mean_pool(hidden: np.ndarray, include: np.ndarray) -> np.ndarray:
    """Mean over the tokens selected by ``include``, per sentence.

    ``include`` is a (batch, tokens) boolean mask that is already cleared
    on padding and special positions. A mask selecting exactly one token
    returns that token's vector unchanged.
    """
    hidden = np.asarray(hidden, dtype=np.float64)
    include = np.asarray(include, dtype=bool)
    if hidden.ndim != 3 or include.shape != hidden.shape[:2]:
        raise ValueError(
            f"shape mismatch: hidden {hidden.shape}, include {include.shape}"
        )
    counts = include.sum(axis=1)
    if np.any(counts == 0):
        rows = np.flatnonzero(counts == 0).tolist()
        raise PoolingError(f"sentences {rows} have no tokens to pool")
    pooled = (hidden * include[:, :, None]).sum(axis=1) / counts[:, None]
    if not np.isfinite(pooled).all():
        raise PoolingError("pooled vectors contain NaN or Inf")
    return pooled


def last_token_pool(hidden: np.ndarray, attention_mask: np.ndarray) -> np.ndarray:
    """Hidden state of the final non-padding input token, per sentence."""
    hidden = np.asarray(hidden, dtype=np.float64)
    attention_mask = np.asarray(attention_mask)
    if hidden.ndim != 3 or attention_mask.shape != hidden.shape[:2]:
        raise ValueError(
            f"shape mismatch: hidden {hidden.shape}, mask {attention_mask.shape}"
        )
    lengths = attention_mask.astype(bool).sum(axis=1)
    if np.any(lengths == 0):
        rows = np.flatnonzero(lengths == 0).tolist()
        raise PoolingError(f"sentences {rows} have no input tokens")
    pooled = hidden[np.arange(hidden.shape[0]), lengths - 1]
    if not np.isfinite(pooled).all():
        raise PoolingError("pooled vectors contain NaN or Inf")
    return pooled
