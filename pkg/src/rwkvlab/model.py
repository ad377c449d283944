"""Toy RWKV encoder stack.

A layer applies two sub-blocks, each wrapped in a residual connection:

    time-mixing:    token shift -> r/k/v projections -> WKV -> output proj
    channel-mixing: token shift -> squared-relu feed-forward gated by a
                    sigmoid receptance

Pre-block layer normalization (plus one normalization after the embedding)
is available behind ``ModelConfig.layer_norm`` and is off by default so the
arithmetic matches the block formulas exactly.  The per-layer hidden states
recorded by ``encode`` are the post-residual streams.

``layer_backward`` provides exact reverse-mode adjoints of a whole layer,
used by the gradient-propagation diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tracking
from .errors import EmptyInputError, ShapeError, VocabError
from .rng import SeededRng
from .wkv import WkvState, wkv_backward, wkv_recurrent

LN_EPS = 1e-5
DECAY_INIT_RANGE = (0.1, 3.0)

# receptances are clamped inside (0, 1) so the WKV denominator stays
# strictly positive and o = kv/r cannot overflow when the sigmoid
# saturates; the floor only distorts pre-activations below -69, far
# outside desk-scale reach
_R_LO = 1e-30
_R_HI = np.nextafter(1.0, 0.0)


@dataclass(frozen=True)
class ModelConfig:
    d_model: int
    n_layers: int
    vocab_size: int
    seed: int
    layer_norm: bool = False

    def __post_init__(self):
        if self.d_model < 1 or self.n_layers < 1 or self.vocab_size < 1:
            raise ShapeError("d_model, n_layers and vocab_size must all be >= 1")


@dataclass
class LayerNormParams:
    gain: np.ndarray
    bias: np.ndarray


@dataclass
class TimeMixParams:
    w_r: np.ndarray
    w_k: np.ndarray
    w_v: np.ndarray
    w_o: np.ndarray
    decay: np.ndarray  # per-channel lambda >= 0
    bonus: np.ndarray  # per-channel current-token bonus u
    mu_r: np.ndarray
    mu_k: np.ndarray
    mu_v: np.ndarray


@dataclass
class ChannelMixParams:
    w_r: np.ndarray
    w_k: np.ndarray
    w_v: np.ndarray
    mu: np.ndarray


@dataclass
class LayerParams:
    ln1: LayerNormParams
    ln2: LayerNormParams
    time_mix: TimeMixParams
    channel_mix: ChannelMixParams


@dataclass
class RwkvParams:
    config: ModelConfig
    token_embedding: np.ndarray  # vocab_size x d
    embed_norm: LayerNormParams
    layers: list[LayerParams]


@dataclass
class LayerTrace:
    """Per-layer hidden-state matrices captured for one token sequence."""

    hidden: list[np.ndarray]  # n_layers matrices, each n x d
    token_count: int

    def layer(self, index: int) -> np.ndarray:
        """Hidden states of 1-based layer ``index``."""
        if not 1 <= index <= len(self.hidden):
            raise ShapeError(f"layer index {index} outside 1..{len(self.hidden)}")
        return self.hidden[index - 1]


@dataclass
class _LayerCarry:
    """State carried across streaming calls for one layer."""

    tm_prev: np.ndarray | None = None
    cm_prev: np.ndarray | None = None
    wkv: WkvState | None = None


# ---------------------------------------------------------------------------
# Initialization
# ---------------------------------------------------------------------------


def _norm_params(d: int) -> LayerNormParams:
    return LayerNormParams(np.ones(d), np.zeros(d))


def init_model(config: ModelConfig) -> RwkvParams:
    """Deterministic parameters for the given config.

    Projection matrices and the token embedding are uniform in
    +-1/sqrt(d); decays are linearly spaced over [0.1, 3.0] per channel;
    bonuses start at zero and every token-shift interpolator at 0.5.
    Draw order: embedding, then per layer w_r, w_k, w_v, w_o of the
    time-mixing block followed by w_r, w_k, w_v of the channel-mixing block.
    """
    rng = SeededRng(config.seed)
    d = config.d_model
    scale = 1.0 / np.sqrt(d)
    embedding = rng.uniform_array((config.vocab_size, d), -scale, scale)
    tracking.register(embedding)
    layers = []
    for _ in range(config.n_layers):
        tm = TimeMixParams(
            w_r=rng.uniform_array((d, d), -scale, scale),
            w_k=rng.uniform_array((d, d), -scale, scale),
            w_v=rng.uniform_array((d, d), -scale, scale),
            w_o=rng.uniform_array((d, d), -scale, scale),
            decay=np.linspace(DECAY_INIT_RANGE[0], DECAY_INIT_RANGE[1], d),
            bonus=np.zeros(d),
            mu_r=np.full(d, 0.5),
            mu_k=np.full(d, 0.5),
            mu_v=np.full(d, 0.5),
        )
        cm = ChannelMixParams(
            w_r=rng.uniform_array((d, d), -scale, scale),
            w_k=rng.uniform_array((d, d), -scale, scale),
            w_v=rng.uniform_array((d, d), -scale, scale),
            mu=np.full(d, 0.5),
        )
        layers.append(LayerParams(_norm_params(d), _norm_params(d), tm, cm))
    return RwkvParams(config, embedding, _norm_params(d), layers)


def zero_model(config: ModelConfig) -> RwkvParams:
    """Model whose blocks all output zero, so every layer acts as identity."""
    params = init_model(config)
    for layer in params.layers:
        for w in (layer.time_mix.w_r, layer.time_mix.w_k, layer.time_mix.w_v,
                  layer.time_mix.w_o, layer.channel_mix.w_r,
                  layer.channel_mix.w_k, layer.channel_mix.w_v):
            w[:] = 0.0
    return params


# ---------------------------------------------------------------------------
# Elementwise helpers
# ---------------------------------------------------------------------------


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _layer_norm(xs: np.ndarray, ln: LayerNormParams) -> np.ndarray:
    mean = xs.mean(axis=-1, keepdims=True)
    var = ((xs - mean) ** 2).mean(axis=-1, keepdims=True)
    return (xs - mean) / np.sqrt(var + LN_EPS) * ln.gain + ln.bias


def _token_shift(xs: np.ndarray, mu: np.ndarray, prev: np.ndarray | None) -> np.ndarray:
    shifted = np.empty_like(xs)
    shifted[0] = 0.0 if prev is None else prev
    shifted[1:] = xs[:-1]
    return mu * xs + (1.0 - mu) * shifted


# ---------------------------------------------------------------------------
# Blocks
# ---------------------------------------------------------------------------


def time_mix_forward(
    tm: TimeMixParams,
    xs: np.ndarray,
    prev: np.ndarray | None = None,
    state: WkvState | None = None,
) -> tuple[np.ndarray, WkvState, np.ndarray]:
    """Sequence-direction block; returns (outputs, wkv state, last input row).

    The caller adds the residual.  ``prev``/``state`` continue a stream; the
    first token of a fresh sequence is shifted against the zero vector.
    """
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim != 2 or xs.shape[1] != tm.w_r.shape[0]:
        raise ShapeError(f"time_mix expects (n, {tm.w_r.shape[0]}) inputs, got {xs.shape}")
    xr = _token_shift(xs, tm.mu_r, prev)
    xk = _token_shift(xs, tm.mu_k, prev)
    xv = _token_shift(xs, tm.mu_v, prev)
    r = np.clip(_sigmoid(xr @ tm.w_r.T), _R_LO, _R_HI)
    k = xk @ tm.w_k.T
    v = xv @ tm.w_v.T
    o, new_state = wkv_recurrent(tm.decay, tm.bonus, r, k, v, state)
    return o @ tm.w_o.T, new_state, xs[-1].copy()


def channel_mix_forward(
    cm: ChannelMixParams,
    xs: np.ndarray,
    prev: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Feature-direction block; returns (outputs, last input row).

    y_t = sigmoid(W_r x~_t) * (W_v relu(W_k x~_t)^2); caller adds residual.
    """
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim != 2 or xs.shape[1] != cm.w_r.shape[0]:
        raise ShapeError(f"channel_mix expects (n, {cm.w_r.shape[0]}) inputs, got {xs.shape}")
    xm = _token_shift(xs, cm.mu, prev)
    kk = np.maximum(xm @ cm.w_k.T, 0.0) ** 2
    return _sigmoid(xm @ cm.w_r.T) * (kk @ cm.w_v.T), xs[-1].copy()


def _layer_forward(
    params: RwkvParams,
    index: int,
    xs: np.ndarray,
    carry: _LayerCarry | None = None,
) -> tuple[np.ndarray, _LayerCarry]:
    """One full layer (both blocks with residuals) on stream ``xs``."""
    layer = params.layers[index - 1]
    carry = carry or _LayerCarry()
    tm_in = _layer_norm(xs, layer.ln1) if params.config.layer_norm else xs
    y, wkv_state, tm_last = time_mix_forward(layer.time_mix, tm_in, carry.tm_prev, carry.wkv)
    b = xs + y
    cm_in = _layer_norm(b, layer.ln2) if params.config.layer_norm else b
    y2, cm_last = channel_mix_forward(layer.channel_mix, cm_in, carry.cm_prev)
    return b + y2, _LayerCarry(tm_last, cm_last, wkv_state)


# ---------------------------------------------------------------------------
# Encoding
# ---------------------------------------------------------------------------


def _validate_tokens(config: ModelConfig, tokens) -> list[int]:
    ids = list(tokens)
    if not ids:
        raise EmptyInputError("cannot encode an empty token sequence")
    for t in ids:
        if not 0 <= int(t) < config.vocab_size:
            raise VocabError(f"token id {t} outside vocabulary of size {config.vocab_size}")
    return [int(t) for t in ids]


def embed_tokens(params: RwkvParams, tokens) -> np.ndarray:
    """Stream entering layer 1 (embedding rows, normalized when enabled)."""
    ids = _validate_tokens(params.config, tokens)
    xs = params.token_embedding[ids].copy()
    if params.config.layer_norm:
        xs = _layer_norm(xs, params.embed_norm)
    tracking.register(xs)
    return xs


def encode(params: RwkvParams, tokens) -> LayerTrace:
    """Run the whole stack, recording every layer's post-residual states.

    Tracked allocations: the embedded stream plus one (n, d) matrix per
    layer, all live until return, so the peak is (n_layers + 1) * n * d
    doubles.
    """
    stream = embed_tokens(params, tokens)
    hidden = []
    xs = stream
    for index in range(1, params.config.n_layers + 1):
        xs, _ = _layer_forward(params, index, xs)
        tracking.register(xs)
        hidden.append(xs)
    return LayerTrace(hidden, token_count=len(stream))


class EncoderSession:
    """Token-at-a-time encoder carrying per-layer recurrence state."""

    def __init__(self, params: RwkvParams):
        self.params = params
        self._carries = [_LayerCarry() for _ in range(params.config.n_layers)]

    def feed(self, token: int) -> list[np.ndarray]:
        """Advance one token; returns each layer's state row for it."""
        xs = embed_tokens(self.params, [token])
        rows = []
        for index in range(1, self.params.config.n_layers + 1):
            xs, self._carries[index - 1] = _layer_forward(
                self.params, index, xs, self._carries[index - 1]
            )
            rows.append(xs[0].copy())
        return rows


# ---------------------------------------------------------------------------
# Layer adjoints (for gradient diagnostics)
# ---------------------------------------------------------------------------


def layer_inputs(params: RwkvParams, tokens) -> list[np.ndarray]:
    """Streams [H^0 .. H^L]: H^0 enters layer 1, H^l leaves layer l."""
    xs = embed_tokens(params, tokens)
    streams = [xs]
    for index in range(1, params.config.n_layers + 1):
        xs, _ = _layer_forward(params, index, xs)
        streams.append(xs)
    return streams


def layer_forward(params: RwkvParams, index: int, xs: np.ndarray) -> np.ndarray:
    """Layer ``index`` as a fresh-sequence map (no carried state)."""
    out, _ = _layer_forward(params, index, np.asarray(xs, dtype=np.float64))
    return out


def _layer_norm_backward(xs: np.ndarray, ln: LayerNormParams, grad: np.ndarray) -> np.ndarray:
    mean = xs.mean(axis=-1, keepdims=True)
    var = ((xs - mean) ** 2).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + LN_EPS)
    xhat = (xs - mean) * inv
    ghat = grad * ln.gain
    return inv * (
        ghat
        - ghat.mean(axis=-1, keepdims=True)
        - xhat * (ghat * xhat).mean(axis=-1, keepdims=True)
    )


def _token_shift_backward(grad_mixed: np.ndarray, mu: np.ndarray) -> np.ndarray:
    gx = mu * grad_mixed
    gx[:-1] += (1.0 - mu) * grad_mixed[1:]
    return gx


def _time_mix_input_backward(tm: TimeMixParams, xs: np.ndarray, grad_y: np.ndarray) -> np.ndarray:
    xr = _token_shift(xs, tm.mu_r, None)
    xk = _token_shift(xs, tm.mu_k, None)
    xv = _token_shift(xs, tm.mu_v, None)
    r = np.clip(_sigmoid(xr @ tm.w_r.T), _R_LO, _R_HI)
    k = xk @ tm.w_k.T
    v = xv @ tm.w_v.T
    grad_o = grad_y @ tm.w_o
    grads = wkv_backward(tm.decay, tm.bonus, r, k, v, grad_o)
    grad_zr = grads.r * r * (1.0 - r)
    gx = _token_shift_backward(grad_zr @ tm.w_r, tm.mu_r)
    gx += _token_shift_backward(grads.k @ tm.w_k, tm.mu_k)
    gx += _token_shift_backward(grads.v @ tm.w_v, tm.mu_v)
    return gx


def _channel_mix_input_backward(cm: ChannelMixParams, xs: np.ndarray, grad_y: np.ndarray) -> np.ndarray:
    xm = _token_shift(xs, cm.mu, None)
    zr = xm @ cm.w_r.T
    s = _sigmoid(zr)
    pre = xm @ cm.w_k.T
    kk = np.maximum(pre, 0.0) ** 2
    wv = kk @ cm.w_v.T
    grad_zr = grad_y * wv * s * (1.0 - s)
    grad_kk = (grad_y * s) @ cm.w_v
    grad_pre = grad_kk * 2.0 * np.maximum(pre, 0.0)
    grad_xm = grad_zr @ cm.w_r + grad_pre @ cm.w_k
    return _token_shift_backward(grad_xm, cm.mu)


def layer_backward(params: RwkvParams, index: int, xs: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    """Gradient of a scalar loss w.r.t. the input stream of layer ``index``,
    given its gradient w.r.t. the layer's output stream (fresh sequence)."""
    layer = params.layers[index - 1]
    norm = params.config.layer_norm
    xs = np.asarray(xs, dtype=np.float64)
    grad_out = np.asarray(grad_out, dtype=np.float64)
    if grad_out.shape != xs.shape:
        raise ShapeError(f"grad shape {grad_out.shape} must match input shape {xs.shape}")

    tm_in = _layer_norm(xs, layer.ln1) if norm else xs
    y, _, _ = time_mix_forward(layer.time_mix, tm_in)
    b = xs + y
    cm_in = _layer_norm(b, layer.ln2) if norm else b

    grad_cm_in = _channel_mix_input_backward(layer.channel_mix, cm_in, grad_out)
    grad_b = grad_out + (_layer_norm_backward(b, layer.ln2, grad_cm_in) if norm else grad_cm_in)
    grad_tm_in = _time_mix_input_backward(layer.time_mix, tm_in, grad_b)
    return grad_b + (_layer_norm_backward(xs, layer.ln1, grad_tm_in) if norm else grad_tm_in)
