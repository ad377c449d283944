"""Empirical probes of the encoder stack.

Covers per-layer activation entropy, gradient-norm attenuation with depth
(with a fitted decay rate), Jacobian diagonality, singular-value decay of
weight matrices, a causal quadratic-attention reference, and a wall-clock
scaling benchmark comparing the linear recurrence against it.

The gradient probe loss is fixed (sum of squares of the final layer's
states) so the fitted decay rate is well defined and reproducible.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DegenerateInputError,
    EmptyInputError,
    ShapeError,
    SizeLimitError,
    UnsupportedError,
)
from .model import LayerTrace, RwkvParams, encode, layer_backward, layer_forward, layer_inputs
from .numerics import fit_exp_decay, shannon_entropy_bits, singular_values
from .rng import SeededRng
from .wkv import wkv_recurrent

JACOBIAN_WIDTH_LIMIT = 32
SCALING_LENGTH_LIMIT = 4096
SV_TAIL_CUTOFF = 1e-12  # relative to the largest singular value


# ---------------------------------------------------------------------------
# Entropy
# ---------------------------------------------------------------------------


def entropy_curve(traces: Sequence[LayerTrace], bins: int = 64) -> np.ndarray:
    """Histogram entropy (bits) per layer, pooling every token and channel
    of every trace."""
    traces = list(traces)
    if not traces:
        raise EmptyInputError("entropy curve needs at least one trace")
    n_layers = len(traces[0].hidden)
    if any(len(t.hidden) != n_layers for t in traces):
        raise ShapeError("traces disagree on layer count")
    out = np.empty(n_layers)
    for l in range(n_layers):
        pooled = np.concatenate([t.hidden[l].ravel() for t in traces])
        out[l] = shannon_entropy_bits(pooled, bins)
    return out


# ---------------------------------------------------------------------------
# Gradient propagation
# ---------------------------------------------------------------------------


def gradient_decay_profile(
    params: RwkvParams, tokens, probe: str = "sumsq"
) -> tuple[np.ndarray, float]:
    """Gradient norms of the probe loss w.r.t. each layer's input stream.

    Returns (norms, alpha): norms[i] is the Frobenius norm of the loss
    gradient w.r.t. the stream entering layer i+1 (shallowest first); alpha
    is the decay rate fitted over the same norms ordered top-down, so a
    positive alpha means gradients attenuate toward shallow layers.
    """
    if probe != "sumsq":
        raise UnsupportedError(f"unknown probe loss {probe!r}; only 'sumsq' is defined")
    streams = layer_inputs(params, tokens)
    n_layers = params.config.n_layers
    grad = 2.0 * streams[n_layers]
    norms = np.empty(n_layers)
    for l in range(n_layers, 0, -1):
        grad = layer_backward(params, l, streams[l - 1], grad)
        norms[l - 1] = float(np.sqrt(np.sum(grad * grad)))
    return norms, fit_exp_decay(norms[::-1])


def probe_loss(params: RwkvParams, streams_from: np.ndarray, first_layer: int) -> float:
    """Probe loss evaluated by running layers first_layer..L on a given
    input stream (the finite-difference oracle hook)."""
    xs = np.asarray(streams_from, dtype=np.float64)
    for index in range(first_layer, params.config.n_layers + 1):
        xs = layer_forward(params, index, xs)
    return float(np.sum(xs * xs))


# ---------------------------------------------------------------------------
# Jacobian diagonality
# ---------------------------------------------------------------------------


def layer_map(params: RwkvParams, index: int) -> Callable[[np.ndarray], np.ndarray]:
    """Layer ``index`` as a single-token map on d-vectors (residuals included)."""

    def f(x: np.ndarray) -> np.ndarray:
        return layer_forward(params, index, np.asarray(x, dtype=np.float64)[None, :])[0]

    return f


def jacobian_diagonality(
    f: Callable[[np.ndarray], np.ndarray], x: np.ndarray, step: float = 1e-5
) -> float:
    """Sum |off-diagonal| / sum |diagonal| of the Jacobian of ``f`` at ``x``,
    estimated column by column with central differences."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeError("jacobian probe point must be a vector")
    d = x.size
    if d > JACOBIAN_WIDTH_LIMIT:
        raise SizeLimitError(f"jacobian probing is limited to width {JACOBIAN_WIDTH_LIMIT}")
    jac = np.empty((d, d))
    for j in range(d):
        xp = x.copy()
        xp[j] += step
        xm = x.copy()
        xm[j] -= step
        jac[:, j] = (f(xp) - f(xm)) / (2.0 * step)
    diag = np.abs(np.diag(jac)).sum()
    off = np.abs(jac).sum() - diag
    if diag == 0.0:
        return float("inf") if off > 0.0 else 0.0
    return float(off / diag)


# ---------------------------------------------------------------------------
# Quadratic attention reference
# ---------------------------------------------------------------------------


def attention_reference(q, k, v) -> np.ndarray:
    """Causal softmax(q k^T / sqrt(d)) v, deliberately O(n^2 d).

    Row t attends to columns <= t, so the comparison against the inherently
    causal recurrence is like for like.
    """
    q = np.asarray(q, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if q.ndim != 2 or q.shape != k.shape or v.ndim != 2 or v.shape[0] != q.shape[0]:
        raise ShapeError(f"non-conformable attention shapes {q.shape}, {k.shape}, {v.shape}")
    n, d = q.shape
    scores = (q @ k.T) / np.sqrt(d)
    mask = np.triu(np.ones((n, n), dtype=bool), k=1)
    scores[mask] = -np.inf
    scores -= scores.max(axis=1, keepdims=True)
    weights = np.exp(scores)
    weights /= weights.sum(axis=1, keepdims=True)
    return weights @ v


# ---------------------------------------------------------------------------
# Singular value decay
# ---------------------------------------------------------------------------


def sv_decay_rate(m) -> float:
    """Exponential decay rate of the normalized singular-value spectrum.

    The spectrum is divided by its largest value and entries below
    1e-12 of it are dropped before fitting (numerical-noise floor).
    Returns 0.0 when fewer than two values survive the cutoff.
    """
    sv = singular_values(m)
    if sv[0] == 0.0:
        raise DegenerateInputError("rank-0 matrix has no spectrum to fit")
    normalized = sv / sv[0]
    kept = normalized[normalized >= SV_TAIL_CUTOFF]
    if kept.size < 2:
        return 0.0
    return fit_exp_decay(kept)


# ---------------------------------------------------------------------------
# Complexity scaling
# ---------------------------------------------------------------------------


@dataclass
class ScalingResult:
    lengths: list[int]
    seconds: dict[str, list[float]]  # form -> median wall time per length
    exponents: dict[str, float]      # form -> log-log slope over upper half


def _median_time(fn: Callable[[], object], reps: int) -> float:
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    times.sort()
    return times[len(times) // 2]


def _loglog_slope(ns: Sequence[int], ts: Sequence[float]) -> float:
    x = np.log(np.asarray(ns, dtype=np.float64))
    y = np.log(np.asarray(ts, dtype=np.float64))
    xc = x - x.mean()
    return float(np.dot(xc, y - y.mean()) / np.dot(xc, xc))


def scaling_benchmark(
    params: RwkvParams, lengths: Sequence[int], reps: int = 5, seed: int = 1234
) -> ScalingResult:
    """Median-of-``reps`` wall times of the linear recurrence and of the
    quadratic attention reference per sequence length, plus their fitted
    log-log exponents over the upper half of the lengths."""
    lengths = [int(n) for n in lengths]
    if len(lengths) < 4 or any(b <= a for a, b in zip(lengths, lengths[1:])):
        raise ShapeError("need at least 4 strictly increasing lengths")
    d = params.config.d_model
    if max(lengths) > SCALING_LENGTH_LIMIT or d > JACOBIAN_WIDTH_LIMIT:
        raise SizeLimitError(
            f"benchmark limited to n <= {SCALING_LENGTH_LIMIT} at d <= {JACOBIAN_WIDTH_LIMIT}"
        )
    tm = params.layers[0].time_mix
    rng = SeededRng(seed)
    seconds: dict[str, list[float]] = {"wkv_recurrent": [], "attention_reference": []}
    for n in lengths:
        r = rng.uniform_array((n, d), 0.05, 0.95)
        k = rng.uniform_array((n, d), -1.0, 1.0)
        v = rng.uniform_array((n, d), -1.0, 1.0)
        q = rng.uniform_array((n, d), -1.0, 1.0)
        seconds["wkv_recurrent"].append(
            _median_time(lambda: wkv_recurrent(tm.decay, tm.bonus, r, k, v), reps)
        )
        seconds["attention_reference"].append(
            _median_time(lambda: attention_reference(q, k, v), reps)
        )
    half = len(lengths) // 2
    exponents = {
        form: _loglog_slope(lengths[half:], times[half:])
        for form, times in seconds.items()
    }
    return ScalingResult(lengths, seconds, exponents)


# ---------------------------------------------------------------------------
# Combined profile
# ---------------------------------------------------------------------------


@dataclass
class DiagnosticsProfile:
    entropy_bits: np.ndarray
    gradient_norms: np.ndarray
    alpha: float
    diagonality: np.ndarray
    sv_decay: dict[str, float]
    scaling_exponents: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "entropy_bits": [float(x) for x in self.entropy_bits],
            "gradient_norms": [float(x) for x in self.gradient_norms],
            "alpha": float(self.alpha),
            "diagonality": [float(x) for x in self.diagonality],
            "sv_decay": {k: float(v) for k, v in self.sv_decay.items()},
            "scaling_exponents": {k: float(v) for k, v in self.scaling_exponents.items()},
        }


def collect_profile(
    params: RwkvParams,
    token_seqs: Sequence[Sequence[int]],
    bins: int = 64,
    bench_lengths: Sequence[int] | None = None,
    gaussian_seed: int = 7,
) -> DiagnosticsProfile:
    """Full diagnostics pass over the given token sequences.

    Entropy pools every sequence; the gradient profile and the per-layer
    diagonality probe use the first sequence (diagonality is evaluated at
    each layer's observed final-token input).  Singular-value decay is
    reported for every layer's key projection next to a dense Gaussian
    reference matrix of the same size.
    """
    token_seqs = [list(s) for s in token_seqs]
    if not token_seqs:
        raise EmptyInputError("diagnostics need at least one token sequence")
    traces = [encode(params, toks) for toks in token_seqs]
    entropy = entropy_curve(traces, bins)
    norms, alpha = gradient_decay_profile(params, token_seqs[0])
    streams = layer_inputs(params, token_seqs[0])
    diagonality = np.array(
        [
            jacobian_diagonality(layer_map(params, l), streams[l - 1][-1])
            for l in range(1, params.config.n_layers + 1)
        ]
    )
    d = params.config.d_model
    sv_decay = {
        f"layer{i}.time_mix.w_k": sv_decay_rate(layer.time_mix.w_k)
        for i, layer in enumerate(params.layers, start=1)
    }
    sv_decay["gaussian_reference"] = sv_decay_rate(SeededRng(gaussian_seed).normal_array((d, d)))
    scaling = {}
    if bench_lengths is not None:
        scaling = scaling_benchmark(params, bench_lengths).exponents
    return DiagnosticsProfile(entropy, norms, alpha, diagonality, sv_decay, scaling)
