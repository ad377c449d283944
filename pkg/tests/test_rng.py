import numpy as np

from rwkvlab.rng import SeededRng

# canonical splitmix64 outputs for seed 0, as published with the algorithm
SPLITMIX64_SEED0 = [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]


def test_matches_published_splitmix64_stream():
    rng = SeededRng(0)
    assert [rng.next_u64() for _ in range(3)] == SPLITMIX64_SEED0


def test_same_seed_same_stream():
    a = SeededRng(42)
    b = SeededRng(42)
    assert [a.next_u64() for _ in range(100)] == [b.next_u64() for _ in range(100)]


def test_different_seeds_differ():
    assert SeededRng(1).next_u64() != SeededRng(2).next_u64()


def test_random_unit_interval():
    rng = SeededRng(7)
    xs = [rng.random() for _ in range(1000)]
    assert all(0.0 <= x < 1.0 for x in xs)


def test_uniform_range_and_determinism():
    rng = SeededRng(42)
    assert rng.random() == 0.7415648787718233  # pinned derived constant
    xs = SeededRng(3).uniform_array((50,), -2.0, 5.0)
    assert xs.shape == (50,) and np.all(xs >= -2.0) and np.all(xs < 5.0)


def test_normal_moments_roughly_standard():
    rng = SeededRng(11)
    xs = rng.normal_array(4000)
    assert abs(xs.mean()) < 0.1
    assert abs(xs.std() - 1.0) < 0.1


def test_array_fill_is_row_major():
    seq = SeededRng(5)
    flat = [seq.uniform(0.0, 1.0) for _ in range(6)]
    arr = SeededRng(5).uniform_array((2, 3), 0.0, 1.0)
    assert list(arr.ravel()) == flat
