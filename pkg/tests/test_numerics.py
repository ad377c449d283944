import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rwkvlab.errors import (
    DegenerateInputError,
    DomainError,
    EmptyInputError,
    ShapeError,
    SizeLimitError,
    ZeroVectorError,
)
from rwkvlab.numerics import (
    cosine_similarity,
    fit_exp_decay,
    rank_transform,
    shannon_entropy,
    shannon_entropy_bits,
    singular_values,
    softmax,
    spearman,
)
from rwkvlab.rng import SeededRng

from oracles import (
    brute_ranks,
    decay_rate_by_definition,
    histogram_entropy_bits,
    singular_values_by_charpoly,
    spearman_by_definition,
)

finite_floats = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)


# ---------------------------------------------------------------------------
# rank_transform
# ---------------------------------------------------------------------------


def test_rank_strict_ordering():
    assert list(rank_transform([10, 30, 20])) == [1, 3, 2]


def test_rank_all_ties():
    assert list(rank_transform([5, 5, 5])) == [2, 2, 2]


def test_rank_tied_block_matches_brute_force():
    values = [2, 1, 2, 4]
    assert list(rank_transform(values)) == brute_ranks(values) == [2.5, 1, 2.5, 4]


def test_rank_empty_rejected():
    with pytest.raises(EmptyInputError):
        rank_transform([])


@settings(max_examples=100, deadline=None)
@given(st.lists(finite_floats, min_size=1, max_size=40))
def test_rank_sum_identity(values):
    n = len(values)
    assert math.isclose(float(rank_transform(values).sum()), n * (n + 1) / 2, rel_tol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.lists(finite_floats, min_size=1, max_size=20))
def test_rank_matches_counting_definition(values):
    assert list(rank_transform(values)) == brute_ranks(values)


# ---------------------------------------------------------------------------
# spearman
# ---------------------------------------------------------------------------


def test_spearman_perfect_monotone():
    assert spearman([1, 2, 3], [10, 20, 30]) == 1.0
    assert spearman([1, 2, 3], [30, 20, 10]) == -1.0


def test_spearman_tied_case_matches_brute_force_oracle():
    xs, ys = [1, 2, 2, 4], [0, 1, 1, 0]
    expected = spearman_by_definition(xs, ys)
    assert expected == 0.0  # frozen from the oracle
    assert spearman(xs, ys) == expected


def test_spearman_errors():
    with pytest.raises(ShapeError):
        spearman([1, 2], [1, 2, 3])
    with pytest.raises(DegenerateInputError):
        spearman([1, 1, 1], [1, 2, 3])
    with pytest.raises(DegenerateInputError):
        spearman([1, 2, 3], [7, 7, 7])
    with pytest.raises(DegenerateInputError):
        spearman([1], [2])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(min_value=-50, max_value=50), min_size=2, max_size=25))
def test_spearman_invariant_under_monotone_maps(xs):
    ys = [((7 * x) % 13) - 6 for x in range(len(xs))]
    if len(set(xs)) < 2 or len(set(ys)) < 2:
        return
    base = spearman(xs, ys)
    assert spearman([math.exp(x / 50.0) for x in xs], ys) == pytest.approx(base, abs=1e-12)
    assert spearman([2 * x + 7 for x in xs], ys) == pytest.approx(base, abs=1e-12)


# ---------------------------------------------------------------------------
# cosine similarity
# ---------------------------------------------------------------------------


def test_cosine_identical_orthogonal_antipodal():
    assert cosine_similarity([1, 2, 3], [1, 2, 3]) == pytest.approx(1.0, abs=1e-15)
    assert cosine_similarity([1, 0], [0, 1]) == 0.0
    assert cosine_similarity([1, 0], [-1, 0]) == -1.0


def test_cosine_zero_vector_rejected():
    with pytest.raises(ZeroVectorError):
        cosine_similarity([0, 0], [1, 2])


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(min_value=-1e3, max_value=1e3), min_size=1, max_size=10),
    st.floats(min_value=1e-3, max_value=1e3),
)
def test_cosine_scale_invariance(a, c):
    b = [x + 1.0 for x in a]
    if math.sqrt(sum(x * x for x in a)) < 1e-9 or math.sqrt(sum(x * x for x in b)) < 1e-9:
        return
    assert cosine_similarity([c * x for x in a], b) == pytest.approx(
        cosine_similarity(a, b), abs=1e-12
    )


# ---------------------------------------------------------------------------
# entropy
# ---------------------------------------------------------------------------


def test_entropy_uniform_occupancy_is_log2_bins():
    samples = [i + 0.5 for i in range(64)]
    assert shannon_entropy_bits(samples, 64) == 6.0


def test_entropy_constant_input_is_zero():
    assert shannon_entropy_bits([3.7] * 100, 64) == 0.0


def test_entropy_seeded_gaussians_match_histogram_oracle():
    rng = SeededRng(2024)
    samples = [rng.normal() for _ in range(10000)]
    expected = histogram_entropy_bits(samples, 64)
    assert expected == pytest.approx(5.170637901452061, abs=1e-12)  # frozen from oracle
    assert shannon_entropy_bits(samples, 64) == pytest.approx(expected, abs=1e-12)


def test_entropy_unit_conversion():
    samples = [i + 0.5 for i in range(64)]
    assert shannon_entropy(samples, 64, unit="nats") == pytest.approx(6.0 * math.log(2), abs=1e-12)
    with pytest.raises(DomainError):
        shannon_entropy(samples, 64, unit="furlongs")


def test_entropy_errors():
    with pytest.raises(EmptyInputError):
        shannon_entropy_bits([], 64)
    with pytest.raises(DomainError):
        shannon_entropy_bits([1.0, 2.0], 1)


@settings(max_examples=60, deadline=None)
@given(st.lists(finite_floats, min_size=1, max_size=200), st.integers(min_value=2, max_value=64))
def test_entropy_bounded_by_log2_bins(samples, bins):
    h = shannon_entropy_bits(samples, bins)
    assert -1e-12 <= h <= math.log2(bins) + 1e-12


# ---------------------------------------------------------------------------
# fit_exp_decay
# ---------------------------------------------------------------------------


def test_decay_fit_analytic_slope():
    series = [1.0, math.exp(-0.5), math.exp(-1.0), math.exp(-1.5)]
    assert fit_exp_decay(series) == pytest.approx(0.5, abs=1e-12)


def test_decay_fit_constant_series_is_zero():
    assert fit_exp_decay([3.0, 3.0, 3.0, 3.0]) == 0.0


def test_decay_fit_noisy_series_matches_lsq_oracle():
    rng = SeededRng(7)
    series = [math.exp(-0.4 * l) * (1.0 + 0.01 * (rng.random() - 0.5)) for l in range(10)]
    expected = decay_rate_by_definition(series)
    assert expected == pytest.approx(0.4001437882104923, abs=1e-12)  # frozen from oracle
    assert fit_exp_decay(series) == pytest.approx(expected, abs=1e-12)


def test_decay_fit_rejects_nonpositive():
    with pytest.raises(DomainError):
        fit_exp_decay([1.0, 0.0, 2.0])
    with pytest.raises(EmptyInputError):
        fit_exp_decay([1.0])


# ---------------------------------------------------------------------------
# softmax
# ---------------------------------------------------------------------------


def test_softmax_symmetry_and_stability():
    assert list(softmax([0.0, 0.0])) == [0.5, 0.5]
    big = softmax([1000.0, 0.0])
    assert np.all(np.isfinite(big))
    assert big[0] == pytest.approx(1.0, abs=1e-12) and big[1] == pytest.approx(0.0, abs=1e-12)


def test_softmax_reference_values():
    # frozen from a 50-digit evaluation of exp(x_i)/sum exp(x_j)
    expected = [0.09003057317038046, 0.24472847105479764, 0.6652409557748219]
    assert np.allclose(softmax([1.0, 2.0, 3.0]), expected, rtol=0, atol=1e-15)


def test_softmax_empty_rejected():
    with pytest.raises(EmptyInputError):
        softmax([])


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.integers(min_value=-50 * 1024, max_value=50 * 1024), min_size=1, max_size=20),
    st.integers(min_value=-200 * 1024, max_value=200 * 1024),
)
def test_softmax_shift_invariance_and_normalization(scaled_v, scaled_shift):
    # dyadic grid keeps v + shift exactly representable, isolating the
    # algorithmic invariant from input rounding
    v = [x / 1024.0 for x in scaled_v]
    shift = scaled_shift / 1024.0
    p = softmax(v)
    q = softmax([x + shift for x in v])
    assert np.all(p > 0)
    assert abs(float(p.sum()) - 1.0) <= 1e-12
    assert np.max(np.abs(p - q)) <= 1e-12


# ---------------------------------------------------------------------------
# singular values
# ---------------------------------------------------------------------------


def test_singular_values_diagonal():
    assert list(singular_values(np.diag([3.0, 2.0, 1.0]))) == [3.0, 2.0, 1.0]


def test_singular_values_rotation():
    theta = 0.7
    rot = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
    assert np.allclose(singular_values(rot), [1.0, 1.0], atol=1e-12)


def test_singular_values_seeded_3x3_matches_charpoly_oracle():
    rng = SeededRng(31)
    m = rng.uniform_array((3, 3), -2.0, 2.0)
    expected = singular_values_by_charpoly(m)
    assert np.allclose(expected, [1.7067926118275656, 1.2947975021978473, 0.16990658824157323])
    assert np.allclose(singular_values(m), expected, atol=1e-9)


def test_singular_values_transpose_agreement():
    rng = SeededRng(8)
    for _ in range(20):
        rows, cols = rng.below(5) + 1, rng.below(5) + 1
        m = rng.uniform_array((rows, cols), -3.0, 3.0)
        a = singular_values(m)
        b = singular_values(m.T)
        assert a.shape == b.shape
        assert np.max(np.abs(a - b)) < 1e-9


def test_singular_values_nonincreasing_nonnegative():
    rng = SeededRng(12)
    for _ in range(20):
        m = rng.uniform_array((4, 4), -1.0, 1.0)
        sv = singular_values(m)
        assert np.all(sv >= 0.0)
        assert np.all(np.diff(sv) <= 1e-15)


def test_singular_values_size_limit():
    with pytest.raises(SizeLimitError):
        singular_values(np.zeros((257, 2)))
