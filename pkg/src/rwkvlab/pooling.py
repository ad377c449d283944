"""Reduce a layer's token-state matrix to one sentence vector.

Average pooling is the column mean; adaptive pooling weights the rows by
softmax(q . h_i) for a query vector q.  Both are written so that adaptive
pooling with q = 0 reproduces average pooling bit for bit (unnormalized
weights, one final division).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError, EmptyInputError, ShapeError

POOL_KINDS = ("average", "max", "last_token", "adaptive")


@dataclass
class PoolStrategy:
    kind: str
    q: np.ndarray | None = None  # query vector, required iff kind == "adaptive"

    def __post_init__(self):
        if self.kind not in POOL_KINDS:
            raise ConfigError(f"unknown pooling kind {self.kind!r}; choose from {POOL_KINDS}")
        if self.q is not None:
            self.q = np.asarray(self.q, dtype=np.float64)
            if self.q.ndim != 1:
                raise ConfigError("pooling query must be a vector")


def adaptive_pool(h: np.ndarray, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Attention-weighted pooling; returns (pooled vector, weights).

    Scores are the raw dot products q . h_i (no scaling); weights are their
    softmax, positive and summing to 1.
    """
    h = np.asarray(h, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if h.ndim != 2 or h.shape[0] == 0:
        raise EmptyInputError("adaptive pooling needs a non-empty (n, d) matrix")
    if q.shape != (h.shape[1],):
        raise ShapeError(f"query length {q.shape} does not match width {h.shape[1]}")
    scores = h @ q
    e = np.exp(scores - scores.max())
    total = e.sum()
    return (e[:, None] * h).sum(axis=0) / total, e / total


def pool(h: np.ndarray, strategy: PoolStrategy) -> np.ndarray:
    """Sentence vector for the token-state matrix ``h`` under ``strategy``."""
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 2 or h.shape[0] == 0:
        raise EmptyInputError("pooling needs a non-empty (n, d) matrix")
    if strategy.kind == "average":
        return h.sum(axis=0) / h.shape[0]
    if strategy.kind == "max":
        return h.max(axis=0)
    if strategy.kind == "last_token":
        return h[-1].copy()
    if strategy.q is None:
        raise ConfigError("adaptive pooling needs a query vector")
    return adaptive_pool(h, strategy.q)[0]


@dataclass
class SnrSpec:
    """Inputs of the pooled-signal quality estimate."""

    n: int               # token count
    signal_norm_sq: float  # squared norm of the informative component
    noise_var: float       # per-token noise variance

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("token count must be >= 1")
        if self.signal_norm_sq < 0.0:
            raise DomainError("signal power cannot be negative")
        if self.noise_var <= 0.0:
            raise DomainError("noise variance must be > 0")


def snr_estimate(spec: SnrSpec) -> float:
    """Effective signal-to-noise ratio of average pooling: n * |h*|^2 / sigma^2."""
    return spec.n * spec.signal_norm_sq / spec.noise_var
