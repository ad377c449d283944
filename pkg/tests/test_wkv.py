import numpy as np
import pytest

from rwkvlab.errors import DomainError, ShapeError
from rwkvlab.rng import SeededRng
from rwkvlab.wkv import WkvState, wkv_backward, wkv_direct, wkv_recurrent

from oracles import central_difference_grad, relative_errors, wkv_by_definition


def random_case(rng, n, d, decay_range=(0.0, 3.0)):
    decay = rng.uniform_array(d, *decay_range)
    bonus = rng.uniform_array(d, -1.0, 1.0)
    r = rng.uniform_array((n, d), 0.05, 0.95)
    k = rng.uniform_array((n, d), -1.5, 1.5)
    v = rng.uniform_array((n, d), -1.5, 1.5)
    return decay, bonus, r, k, v


# ---------------------------------------------------------------------------
# forward
# ---------------------------------------------------------------------------


def test_single_token_closed_form():
    # the bonus cancels between numerator and denominator at t=1
    d = 5
    decay = np.linspace(0.0, 2.0, d)
    bonus = np.full(d, 0.7)
    r = np.full((1, d), 0.3)
    k = np.full((1, d), 2.0)
    v = np.linspace(1.0, 2.0, d).reshape(1, d)
    out = wkv_direct(decay, bonus, r, k, v)
    assert np.allclose(out, k * v / r, atol=1e-15)


def test_constant_inputs_give_scaled_running_mean():
    # with decay 0, bonus 0, k = 1 and constant receptance c, token t emits
    # (sum of v up to t) / (c t); the stated identity at c = 1 is outside
    # the open receptance interval, so it is pinned at c = 0.5
    n, d, c = 6, 3, 0.5
    decay = np.zeros(d)
    bonus = np.zeros(d)
    r = np.full((n, d), c)
    k = np.ones((n, d))
    v = SeededRng(5).uniform_array((n, d), -1.0, 1.0)
    out, _ = wkv_recurrent(decay, bonus, r, k, v)
    expected = np.cumsum(v, axis=0) / (c * np.arange(1, n + 1)[:, None])
    assert np.max(np.abs(out - expected)) < 1e-14


def test_direct_matches_compensated_summation_oracle():
    rng = SeededRng(16)
    decay, bonus, r, k, v = random_case(rng, 16, 4)
    out = wkv_direct(decay, bonus, r, k, v)
    assert np.max(np.abs(out - wkv_by_definition(decay, bonus, r, k, v))) < 1e-12


def test_receptance_domain_enforced():
    decay = np.zeros(2)
    bonus = np.zeros(2)
    k = np.ones((3, 2))
    v = np.ones((3, 2))
    bad = np.full((3, 2), 1.0)
    with pytest.raises(DomainError):
        wkv_direct(decay, bonus, bad, k, v)
    with pytest.raises(DomainError):
        wkv_direct(decay, bonus, np.full((3, 2), -0.1), k, v)


def test_shape_mismatch_rejected():
    with pytest.raises(ShapeError):
        wkv_direct(np.zeros(2), np.zeros(2), np.full((3, 2), 0.5), np.ones((4, 2)), np.ones((3, 2)))
    with pytest.raises(ShapeError):
        wkv_direct(np.zeros(3), np.zeros(2), np.full((3, 2), 0.5), np.ones((3, 2)), np.ones((3, 2)))


# ---------------------------------------------------------------------------
# recurrence
# ---------------------------------------------------------------------------


def test_recurrent_single_token_equals_direct():
    rng = SeededRng(21)
    decay, bonus, r, k, v = random_case(rng, 1, 7)
    direct = wkv_direct(decay, bonus, r, k, v)
    rec, state = wkv_recurrent(decay, bonus, r, k, v)
    assert np.array_equal(direct, rec)
    assert state.s.shape == (7,) and state.d.shape == (7,)


def test_recurrent_matches_direct_on_seeded_cases():
    rng = SeededRng(64)
    decay, bonus, r, k, v = random_case(rng, 64, 8)
    direct = wkv_direct(decay, bonus, r, k, v)
    rec, _ = wkv_recurrent(decay, bonus, r, k, v)
    assert np.max(np.abs(direct - rec)) < 1e-10


def test_streaming_state_equals_batch_state():
    rng = SeededRng(33)
    n, d = 12, 5
    decay, bonus, r, k, v = random_case(rng, n, d)
    _, batch_state = wkv_recurrent(decay, bonus, r, k, v)
    state = None
    outs = []
    for t in range(n):
        o, state = wkv_recurrent(decay, bonus, r[t : t + 1], k[t : t + 1], v[t : t + 1], state)
        outs.append(o[0])
    whole, _ = wkv_recurrent(decay, bonus, r, k, v)
    assert np.max(np.abs(np.vstack(outs) - whole)) < 1e-12
    assert np.max(np.abs(state.s - batch_state.s)) < 1e-12
    assert np.max(np.abs(state.d - batch_state.d)) < 1e-12


def test_denominator_stays_positive_at_saturated_receptance():
    # the encoder clamps sigmoid outputs to [1e-30, 1 - ulp]; both
    # saturation extremes must keep the outputs finite
    d = 4
    decay = np.zeros(d)
    bonus = np.zeros(d)
    for r_val in (1e-30, np.nextafter(1.0, 0.0)):
        r = np.full((5, d), r_val)
        k = SeededRng(6).uniform_array((5, d), -1.0, 1.0)
        v = SeededRng(8).uniform_array((5, d), -1.0, 1.0)
        out, state = wkv_recurrent(decay, bonus, r, k, v)
        assert np.all(np.isfinite(out))
        assert np.all(state.d > 0.0)


def test_decay_monotonicity_token_one_contribution():
    # raising every decay channel strictly shrinks token 1's influence on o_n
    rng = SeededRng(77)
    n, d = 6, 4
    _, bonus, r, k, v = random_case(rng, n, d)
    k[0] = np.maximum(np.abs(k[0]), 0.25)  # keep token 1 influential
    v[0] = np.maximum(np.abs(v[0]), 0.25)

    def contribution(decay):
        full, _ = wkv_recurrent(decay, bonus, r, k, v)
        ablated_k = k.copy()
        ablated_v = v.copy()
        ablated_k[0] = 0.0
        ablated_v[0] = 0.0
        cut, _ = wkv_recurrent(decay, bonus, r, ablated_k, ablated_v)
        return np.abs(full[-1] - cut[-1])

    lo = contribution(np.full(d, 0.2))
    mid = contribution(np.full(d, 0.8))
    hi = contribution(np.full(d, 1.6))
    assert np.all(mid < lo)
    assert np.all(hi < mid)


# ---------------------------------------------------------------------------
# backward
# ---------------------------------------------------------------------------


def test_zero_upstream_gradient_gives_zero_gradients():
    rng = SeededRng(2)
    decay, bonus, r, k, v = random_case(rng, 5, 3)
    grads = wkv_backward(decay, bonus, r, k, v, np.zeros((5, 3)))
    for block in (grads.r, grads.k, grads.v, grads.decay, grads.bonus):
        assert np.all(block == 0.0)


def test_single_token_receptance_gradient_closed_form():
    # o_1 = k v / r, so d o_1 / d r = -k v / r^2 elementwise
    rng = SeededRng(9)
    decay, bonus, r, k, v = random_case(rng, 1, 6)
    g = np.ones((1, 6))
    grads = wkv_backward(decay, bonus, r, k, v, g)
    assert np.allclose(grads.r, -k * v / r**2, rtol=1e-12)


def test_backward_matches_central_differences():
    rng = SeededRng(123)
    for _ in range(5):
        n, d = rng.below(8) + 1, rng.below(4) + 1
        decay, bonus, r, k, v = random_case(rng, n, d, decay_range=(0.1, 1.5))
        g = rng.uniform_array((n, d), -1.0, 1.0)
        grads = wkv_backward(decay, bonus, r, k, v, g)

        def loss_of(**kw):
            args = dict(decay=decay, bonus=bonus, r=r, k=k, v=v)
            args.update(kw)
            return float(np.sum(g * wkv_direct(args["decay"], args["bonus"],
                                               args["r"], args["k"], args["v"])))

        checks = [
            (grads.r, central_difference_grad(lambda x: loss_of(r=x), r)),
            (grads.k, central_difference_grad(lambda x: loss_of(k=x), k)),
            (grads.v, central_difference_grad(lambda x: loss_of(v=x), v)),
            (grads.decay, central_difference_grad(lambda x: loss_of(decay=x), decay)),
            (grads.bonus, central_difference_grad(lambda x: loss_of(bonus=x), bonus)),
        ]
        for analytic, fd in checks:
            rel = relative_errors(analytic, fd)
            if rel.size:
                assert rel.max() <= 1e-6


def test_backward_shape_mismatch():
    rng = SeededRng(4)
    decay, bonus, r, k, v = random_case(rng, 4, 2)
    with pytest.raises(ShapeError):
        wkv_backward(decay, bonus, r, k, v, np.zeros((3, 2)))


def test_state_zeros_helper():
    st = WkvState.zeros(6)
    assert st.s.shape == (6,) and np.all(st.s == 0) and np.all(st.d == 0)
