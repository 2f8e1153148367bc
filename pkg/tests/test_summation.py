import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from heuristic_choice._summation import compensated_sum

finite = st.floats(min_value=-1e12, max_value=1e12, allow_nan=False, allow_infinity=False)


def test_empty_is_zero():
    assert compensated_sum(np.array([])) == 0.0
    assert compensated_sum(np.zeros((3, 0))).shape == (3,)


def test_cancellation_across_blocks():
    # with unit blocks the accumulation is plain Neumaier and recovers the ones exactly
    terms = np.concatenate([[1e16], np.ones(5000), [-1e16]])
    assert compensated_sum(terms, block=1) == 5000.0
    assert compensated_sum([1.0, 1e100, 1.0, -1e100], block=1) == 2.0
    # block partials that cancel are also recovered
    big = np.concatenate([np.full(64, 1e16), np.ones(64), np.full(64, -1e16)])
    assert compensated_sum(big, block=64) == 64.0


def test_rows_are_independent():
    rng = np.random.default_rng(1)
    a = rng.standard_normal((4, 10_000))
    out = compensated_sum(a)
    for i in range(4):
        assert out[i] == compensated_sum(a[i])


def test_padding_does_not_change_sum():
    x = np.arange(1, 4097, dtype=float)
    assert compensated_sum(x, block=2048) == compensated_sum(x[:4096], block=1000) == 4096 * 4097 / 2


@settings(max_examples=200, deadline=None)
@given(st.lists(finite, min_size=1, max_size=300), st.integers(min_value=1, max_value=64))
def test_close_to_fsum(values, block):
    exact = math.fsum(values)
    got = compensated_sum(np.array(values), block=block)
    scale = math.fsum(abs(v) for v in values)
    assert abs(got - exact) <= 1e-14 * scale + 1e-300


def test_decaying_series_matches_fsum():
    i = np.arange(1, 100_001, dtype=float)
    terms = i**-1.1
    assert abs(compensated_sum(terms) - math.fsum(terms)) <= 2e-16 * math.fsum(terms)
