"""Deterministic linear algebra and statistics kernel.

Vectors and matrices are plain numpy float64 arrays.  The constructors
``as_vec64`` / ``as_mat64`` / ``alloc_zeros`` validate finiteness, register
the buffer with the allocation tracker, and are the only supported way to
bring external data into the package.

Summations inside the rank statistics use ``math.fsum`` (correctly rounded),
so results do not depend on summation order and are reproducible across
platforms.
"""

from __future__ import annotations

import math
from math import fsum

import numpy as np

from . import tracking
from .errors import (
    DegenerateInputError,
    DomainError,
    EmptyInputError,
    ShapeError,
    SizeLimitError,
    ZeroVectorError,
)

#: 1-D / 2-D float64 numpy arrays; aliases document intent only.
Vec64 = np.ndarray
Mat64 = np.ndarray

JACOBI_SIZE_LIMIT = 256


def _check_finite(arr: np.ndarray) -> None:
    if not np.all(np.isfinite(arr)):
        raise DomainError("non-finite entries are rejected at construction")


def as_vec64(data) -> Vec64:
    """Validated, tracked 1-D float64 array (always a fresh buffer)."""
    arr = np.array(data, dtype=np.float64)
    if arr.ndim != 1:
        raise ShapeError(f"expected a 1-D vector, got ndim={arr.ndim}")
    _check_finite(arr)
    tracking.register(arr)
    return arr


def as_mat64(data) -> Mat64:
    """Validated, tracked 2-D float64 array (always a fresh buffer)."""
    arr = np.array(data, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got ndim={arr.ndim}")
    _check_finite(arr)
    tracking.register(arr)
    return arr


def alloc_zeros(shape) -> np.ndarray:
    """Tracked zero-initialized float64 buffer."""
    arr = np.zeros(shape, dtype=np.float64)
    tracking.register(arr)
    return arr


# ---------------------------------------------------------------------------
# Rank statistics
# ---------------------------------------------------------------------------


def rank_transform(values) -> Vec64:
    """1-based fractional ranks; tied values share the average rank of their block."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise ShapeError("rank_transform expects a 1-D vector")
    n = v.size
    if n == 0:
        raise EmptyInputError("cannot rank an empty vector")
    _check_finite(v)
    order = np.argsort(v, kind="stable")
    ranks = np.empty(n, dtype=np.float64)
    i = 0
    while i < n:
        j = i
        vi = v[order[i]]
        while j + 1 < n and v[order[j + 1]] == vi:
            j += 1
        # block occupies 1-based ranks i+1 .. j+1; their average is exact in fp
        ranks[order[i : j + 1]] = (i + j + 2) / 2.0
        i = j + 1
    return ranks


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    n = x.size
    mx = fsum(x) / n
    my = fsum(y) / n
    dx = [float(xi) - mx for xi in x]
    dy = [float(yi) - my for yi in y]
    vx = fsum(a * a for a in dx)
    vy = fsum(b * b for b in dy)
    if vx == 0.0 or vy == 0.0:
        raise DegenerateInputError("correlation undefined for constant input")
    cov = fsum(a * b for a, b in zip(dx, dy))
    return cov / math.sqrt(vx * vy)


def spearman(xs, ys) -> float:
    """Pearson correlation of the fractional ranks of ``xs`` and ``ys``."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ShapeError(f"spearman needs equal-length vectors, got {x.shape} vs {y.shape}")
    if x.size < 2:
        raise DegenerateInputError("spearman needs at least 2 observations")
    return _pearson(rank_transform(x), rank_transform(y))


def cosine_similarity(a, b) -> float:
    """dot(a, b) / (|a| |b|); raises ZeroVectorError on a zero-norm operand."""
    av = np.asarray(a, dtype=np.float64)
    bv = np.asarray(b, dtype=np.float64)
    if av.shape != bv.shape or av.ndim != 1:
        raise ShapeError(f"cosine needs equal-length vectors, got {av.shape} vs {bv.shape}")
    na = math.sqrt(float(np.dot(av, av)))
    nb = math.sqrt(float(np.dot(bv, bv)))
    if na == 0.0 or nb == 0.0:
        raise ZeroVectorError("cosine similarity undefined for a zero vector")
    return float(np.dot(av, bv)) / (na * nb)


# ---------------------------------------------------------------------------
# Entropy and decay fitting
# ---------------------------------------------------------------------------


def shannon_entropy_bits(samples, bins: int = 64) -> float:
    """Histogram entropy in bits.

    The histogram has ``bins`` equal-width cells over the observed
    [min, max]; the cell index of sample x is
    ``min(floor((x - lo) / (hi - lo) * bins), bins - 1)``.  Constant input
    has zero entropy by definition (zero-width range).
    """
    s = np.asarray(samples, dtype=np.float64).ravel()
    if s.size == 0:
        raise EmptyInputError("cannot compute entropy of an empty sample")
    if bins < 2:
        raise DomainError("entropy needs at least 2 bins")
    _check_finite(s)
    lo = float(s.min())
    hi = float(s.max())
    if lo == hi:
        return 0.0
    idx = np.floor((s - lo) / (hi - lo) * bins).astype(np.int64)
    np.clip(idx, 0, bins - 1, out=idx)
    counts = np.bincount(idx, minlength=bins)
    p = counts[counts > 0] / s.size
    return float(-np.sum(p * np.log2(p)))


def shannon_entropy(samples, bins: int = 64, unit: str = "bits") -> float:
    """Histogram entropy in the requested unit ("bits" or "nats")."""
    h = shannon_entropy_bits(samples, bins)
    if unit == "bits":
        return h
    if unit == "nats":
        return h * math.log(2.0)
    raise DomainError(f"unknown entropy unit {unit!r}")


def fit_exp_decay(series) -> float:
    """Least-squares decay rate of a positive series.

    Fits series_l = c * exp(-alpha * l) over 0-based indices l by regressing
    -log(series) on l; returns the slope alpha (0 for a constant series,
    negative for a growing one).
    """
    s = np.asarray(series, dtype=np.float64)
    if s.ndim != 1 or s.size < 2:
        raise EmptyInputError("decay fit needs at least 2 points")
    _check_finite(s)
    if np.any(s <= 0.0):
        raise DomainError("decay fit needs strictly positive values")
    y = -np.log(s)
    x = np.arange(s.size, dtype=np.float64)
    xc = x - x.mean()
    yc = y - y.mean()
    return float(np.dot(xc, yc) / np.dot(xc, xc))


# ---------------------------------------------------------------------------
# Softmax
# ---------------------------------------------------------------------------


def softmax(v) -> Vec64:
    """Stable softmax (max subtracted before exponentiation)."""
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise ShapeError("softmax expects a 1-D vector")
    if arr.size == 0:
        raise EmptyInputError("softmax of an empty vector is undefined")
    _check_finite(arr)
    e = np.exp(arr - arr.max())
    return e / e.sum()


# ---------------------------------------------------------------------------
# Small-matrix singular values (cyclic Jacobi on the Gram matrix)
# ---------------------------------------------------------------------------


def _jacobi_eigenvalues(sym: np.ndarray, max_sweeps: int = 64) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations."""
    g = sym.copy()
    n = g.shape[0]
    if n == 1:
        return g.diagonal().copy()
    fro = math.sqrt(float(np.sum(g * g)))
    tol = 1e-15 * fro
    for _ in range(max_sweeps):
        off = math.sqrt(float(2.0 * np.sum(np.triu(g, 1) ** 2)))
        if off <= tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = g[p, q]
                if abs(apq) <= 1e-30 + 1e-18 * (abs(g[p, p]) + abs(g[q, q])):
                    continue
                tau = (g[q, q] - g[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                gp = g[:, p].copy()
                gq = g[:, q].copy()
                g[:, p] = c * gp - s * gq
                g[:, q] = s * gp + c * gq
                rp = g[p, :].copy()
                rq = g[q, :].copy()
                g[p, :] = c * rp - s * rq
                g[q, :] = s * rp + c * rq
                g[p, q] = 0.0
                g[q, p] = 0.0
    return g.diagonal().copy()


def singular_values(m) -> Vec64:
    """Non-increasing singular values of a small matrix.

    Diagonalizes the smaller of m^T m / m m^T with cyclic Jacobi sweeps and
    returns the square roots; limited to 256x256 inputs.
    """
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2:
        raise ShapeError("singular_values expects a matrix")
    rows, cols = a.shape
    if rows == 0 or cols == 0:
        raise EmptyInputError("singular_values of an empty matrix is undefined")
    if rows > JACOBI_SIZE_LIMIT or cols > JACOBI_SIZE_LIMIT:
        raise SizeLimitError(f"matrix exceeds the {JACOBI_SIZE_LIMIT} desk-scale limit")
    _check_finite(a)
    gram = a.T @ a if rows >= cols else a @ a.T
    eig = _jacobi_eigenvalues(gram)
    sv = np.sqrt(np.clip(eig, 0.0, None))
    sv.sort()
    return sv[::-1].copy()
