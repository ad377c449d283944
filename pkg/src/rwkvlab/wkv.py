"""Receptance-weighted key-value aggregation.

Every channel evolves independently.  With per-channel decay rate
``decay`` (lambda >= 0), current-token bonus ``bonus`` (u), receptances
r_t in (0, 1), keys k_t, and values v_t, token t emits

    o_t = [ sum_{i<t} e^{-(t-1-i) lambda} k_i v_i + e^u k_t v_t ]
          / [ sum_{i<t} e^{-(t-1-i) lambda} r_i + e^u r_t ]

(all products elementwise).  ``wkv_direct`` evaluates the sums verbatim in
O(n^2 d); ``wkv_recurrent`` caches them as a running state

    S_t = e^{-lambda} S_{t-1} + k_t v_t,   D_t = e^{-lambda} D_{t-1} + r_t

so that o_t = (S_{t-1} + e^u k_t v_t) / (D_{t-1} + e^u r_t) in O(n d).
``wkv_backward`` gives exact reverse-mode gradients of sum_t <g_t, o_t>
for all five inputs.

With r in (0, 1) and lambda >= 0 the denominator is at least e^u r_t > 0,
so no overflow guard is needed at desk scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError


@dataclass
class WkvState:
    """Cumulative WKV accumulators: s sums decayed k*v, d sums decayed r."""

    s: np.ndarray
    d: np.ndarray

    @classmethod
    def zeros(cls, d_model: int) -> "WkvState":
        return cls(np.zeros(d_model), np.zeros(d_model))

    def copy(self) -> "WkvState":
        return WkvState(self.s.copy(), self.d.copy())


@dataclass
class WkvGrads:
    """Gradients of sum_t <grad_out_t, o_t> for each WKV input."""

    r: np.ndarray
    k: np.ndarray
    v: np.ndarray
    decay: np.ndarray
    bonus: np.ndarray


def _validate(decay, bonus, r, k, v):
    decay = np.asarray(decay, dtype=np.float64)
    bonus = np.asarray(bonus, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if r.ndim != 2 or r.shape != k.shape or r.shape != v.shape:
        raise ShapeError(f"r/k/v must share one (n, d) shape, got {r.shape}, {k.shape}, {v.shape}")
    d = r.shape[1]
    if decay.shape != (d,) or bonus.shape != (d,):
        raise ShapeError(f"decay/bonus must have shape ({d},)")
    if np.any(decay < 0.0):
        raise DomainError("decay rates must be >= 0")
    if np.any(r <= 0.0) or np.any(r >= 1.0):
        raise DomainError("receptance entries must lie strictly inside (0, 1)")
    return decay, bonus, r, k, v


def wkv_direct(decay, bonus, r, k, v) -> np.ndarray:
    """Evaluate the decayed-sum formula literally, one token at a time."""
    decay, bonus, r, k, v = _validate(decay, bonus, r, k, v)
    n, d = r.shape
    eu = np.exp(bonus)
    kv = k * v
    out = np.empty((n, d))
    for t in range(n):
        if t == 0:
            num = eu * kv[0]
            den = eu * r[0]
        else:
            gaps = np.arange(t - 1, -1, -1, dtype=np.float64)  # t-1-i for i=0..t-1
            w = np.exp(-np.outer(gaps, decay))
            num = (w * kv[:t]).sum(axis=0) + eu * kv[t]
            den = (w * r[:t]).sum(axis=0) + eu * r[t]
        out[t] = num / den
    return out


def wkv_step(decay, bonus, state: WkvState, r_t, k_t, v_t) -> tuple[np.ndarray, WkvState]:
    """One recurrence step; returns (o_t, advanced state)."""
    eu = np.exp(bonus)
    kv = k_t * v_t
    out = (state.s + eu * kv) / (state.d + eu * r_t)
    w = np.exp(-decay)
    return out, WkvState(w * state.s + kv, w * state.d + r_t)


def wkv_recurrent(decay, bonus, r, k, v, state: WkvState | None = None) -> tuple[np.ndarray, WkvState]:
    """Linear-time evaluation via the cached recurrence; state may be carried
    across calls to continue a sequence."""
    decay, bonus, r, k, v = _validate(decay, bonus, r, k, v)
    n, d = r.shape
    if state is None:
        state = WkvState.zeros(d)
    elif state.s.shape != (d,) or state.d.shape != (d,):
        raise ShapeError(f"carried state must have width {d}")
    else:
        state = state.copy()
    eu = np.exp(bonus)
    w = np.exp(-decay)
    out = np.empty((n, d))
    s, acc_d = state.s, state.d
    for t in range(n):
        kv = k[t] * v[t]
        out[t] = (s + eu * kv) / (acc_d + eu * r[t])
        s = w * s + kv
        acc_d = w * acc_d + r[t]
    return out, WkvState(s, acc_d)


def wkv_backward(decay, bonus, r, k, v, grad_out) -> WkvGrads:
    """Exact gradients of L = sum_t <grad_out_t, o_t>.

    Per channel, with num_t / den_t the numerator and denominator of o_t:

        dL/dk_i = sum_{t>i} g_t W_{t,i} v_i / den_t + g_i e^u v_i / den_i
        dL/dv_i   symmetric in k
        dL/dr_i = -sum_{t>i} g_t o_t W_{t,i} / den_t - g_i o_i e^u / den_i
        dL/dlam = sum_t g_t [d num_t/d lam - o_t d den_t/d lam] / den_t
        dL/du   = sum_t g_t e^u (k_t v_t - o_t r_t) / den_t

    where W_{t,i} = e^{-(t-1-i) lambda}.  O(n^2 d), adequate at desk scale.
    """
    decay, bonus, r, k, v = _validate(decay, bonus, r, k, v)
    grad_out = np.asarray(grad_out, dtype=np.float64)
    if grad_out.shape != r.shape:
        raise ShapeError(f"grad_out must match r/k/v shape {r.shape}")
    n, d = r.shape
    eu = np.exp(bonus)
    kv = k * v

    # forward pass retaining denominators and outputs
    den = np.empty((n, d))
    out = np.empty((n, d))
    for t in range(n):
        if t == 0:
            num = eu * kv[0]
            den[0] = eu * r[0]
        else:
            gaps = np.arange(t - 1, -1, -1, dtype=np.float64)
            w = np.exp(-np.outer(gaps, decay))
            num = (w * kv[:t]).sum(axis=0) + eu * kv[t]
            den[t] = (w * r[:t]).sum(axis=0) + eu * r[t]
        out[t] = num / den[t]

    grad_r = np.zeros((n, d))
    grad_k = np.zeros((n, d))
    grad_v = np.zeros((n, d))
    grad_decay = np.zeros(d)
    grad_bonus = np.zeros(d)
    for t in range(n):
        a = grad_out[t] / den[t]          # dL/d num_t
        b = grad_out[t] * out[t] / den[t]  # -dL/d den_t
        grad_k[t] += a * eu * v[t]
        grad_v[t] += a * eu * k[t]
        grad_r[t] -= b * eu
        grad_bonus += a * eu * kv[t] - b * eu * r[t]
        if t > 0:
            gaps = np.arange(t - 1, -1, -1, dtype=np.float64)
            w = np.exp(-np.outer(gaps, decay))
            grad_k[:t] += (a * w) * v[:t]
            grad_v[:t] += (a * w) * k[:t]
            grad_r[:t] -= b * w
            gw = gaps[:, None] * w
            grad_decay += -a * (gw * kv[:t]).sum(axis=0) + b * (gw * r[:t]).sum(axis=0)
    return WkvGrads(grad_r, grad_k, grad_v, grad_decay, grad_bonus)
