import numpy as np

from cyclebench.rng import substream


def test_same_seed_and_name_reproduce():
    a = substream(42, "init").standard_normal(8)
    b = substream(42, "init").standard_normal(8)
    assert np.array_equal(a, b)


def test_names_are_independent():
    a = substream(42, "init").standard_normal(8)
    b = substream(42, "shuffle").standard_normal(8)
    assert not np.array_equal(a, b)


def test_seeds_are_independent():
    a = substream(1, "data").standard_normal(8)
    b = substream(2, "data").standard_normal(8)
    assert not np.array_equal(a, b)


def test_draw_order_in_one_stream_does_not_leak_across_names():
    # consuming from one named stream must not advance any other
    first = substream(7, "shuffle").permutation(20)
    other = substream(7, "mixup")
    other.random(1000)
    again = substream(7, "shuffle").permutation(20)
    assert np.array_equal(first, again)


def test_large_seeds_wrap_into_64_bits():
    a = substream(2**64 + 5, "init").random(4)
    b = substream(5, "init").random(4)
    assert np.array_equal(a, b)
