import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bayes_series.catalog import make_series
from bayes_series.errors import DomainError, NonFiniteTermError
from bayes_series.summation import (BlockPlan, NeumaierSum, block_fixed, block_sum,
                                    chunked_parallel_sum, combine, exact_fixed, fixed_to_float)
from oracles import EX1_FIRST_BLOCK_1E6, mp_sum


class Const:
    start_index = 1

    def __init__(self, fn):
        self.fn = fn

    def terms(self, idx):
        return self.fn(np.asarray(idx, dtype=np.float64))


def test_plan_covers_expected_range():
    p = BlockPlan(3, 100, 4)
    assert (p.first, p.last) == (303, 402)
    with pytest.raises(DomainError):
        BlockPlan(1, 0, 1)


def test_zero_series():
    assert block_sum(Const(np.zeros_like), BlockPlan(1, 1000, 3)) == 0.0


def test_alternating_pairs_cancel():
    assert block_sum(make_series("alternating_unit"), BlockPlan(1, 10, 1)) == 0.0


def test_example1_short_block_vs_oracle():
    got = block_sum(make_series("example1"), BlockPlan(2, 10, 1))
    with mpmath.workdps(60):
        ref = mp_sum(lambda i: 1 / mpmath.log(i), 2, 11)
        assert abs(got - ref) / ref <= 1e-12


def test_single_chunk_equals_block_sum():
    s = make_series("example2", a=1.5)
    p = BlockPlan(2, 5000, 2)
    assert chunked_parallel_sum(s, p, chunk=5000) == block_sum(s, p)


def test_inverse_squares_chunked_matches_sequential():
    s = make_series("euler_zeta", a=2.0)
    p = BlockPlan(1, 10**6, 1)
    assert chunked_parallel_sum(s, p, chunk=10**4) == block_sum(s, p)
    assert chunked_parallel_sum(s, p, chunk=10**4, workers=4) == block_sum(s, p)


def test_zeta_two_partial_sum():
    s = make_series("euler_zeta", a=2.0)
    assert abs(block_sum(s, BlockPlan(1, 10**6, 1)) - math.pi**2 / 6) < 1e-5


def test_non_finite_term_reports_index():
    bad = Const(lambda i: np.where(i == 17, np.nan, 1.0))
    with pytest.raises(NonFiniteTermError) as e:
        block_sum(bad, BlockPlan(1, 50, 1))
    assert e.value.index == 17


def test_block_below_start_rejected():
    with pytest.raises(DomainError):
        block_sum(make_series("example1"), BlockPlan(1, 10, 1))


def test_exact_fixed_is_exact():
    # 1e16 + 1 - 1e16 loses the 1 in naive float arithmetic
    v = np.array([1e16, 1.0, -1e16, 2.0**-1074, -(2.0**-1074), 3.5])
    assert fixed_to_float(exact_fixed(v)) == 4.5
    assert fixed_to_float(exact_fixed(np.array([2.0**-1074] * 3))) == 3 * 2.0**-1074
    assert exact_fixed(np.zeros(0)) == 0


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, min_value=-1e300,
                          max_value=1e300), min_size=1, max_size=200))
def test_exact_fixed_matches_fsum(xs):
    assert fixed_to_float(exact_fixed(np.array(xs))) == math.fsum(xs)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5000), st.integers(1, 6), st.integers(1, 8))
def test_result_independent_of_chunking(chunk, workers, stage):
    s = make_series("example4", a=1.3, b=0.2)
    p = BlockPlan(s.start_index, 4096, stage)
    assert chunked_parallel_sum(s, p, chunk, workers) == block_sum(s, p)


@pytest.mark.parametrize("sid,theta", [("example1", {}), ("example3", {"a": 3.0}),
                                       ("mobius_dirichlet", {"a": 0.5}),
                                       ("example6", {"a": 0.0, "b": 1.0})])
def test_additivity(sid, theta):
    s = make_series(sid, **theta)
    whole = BlockPlan(s.start_index, 20000, 3)
    left, right = whole.halves()
    assert (left.first, right.last) == (whole.first, whole.last)
    # exact halves add up exactly
    assert block_fixed(s, left) + block_fixed(s, right) == block_fixed(s, whole)
    full = block_sum(s, whole)
    comb = combine(block_sum(s, left), block_sum(s, right))
    assert abs(comb - full) <= math.ulp(full)


def test_neumaier_running_sum():
    acc = NeumaierSum()
    for x in [1e16, 1.0, -1e16] * 1000:
        acc.add(x)
    assert acc.value == 1000.0
    assert float(acc) == 1000.0


def test_accuracy_first_block_example1():
    got = chunked_parallel_sum(make_series("example1"), BlockPlan(2, 10**6, 1))
    with mpmath.workdps(40):
        assert abs(got - EX1_FIRST_BLOCK_1E6) / EX1_FIRST_BLOCK_1E6 <= 1e-12


def test_frozen_oracle_value():
    """Recompute the frozen 10^6-term reference (about 12 s)."""
    with mpmath.workdps(30):
        log = mpmath.log
        s = mpmath.mpf(0)
        for i in range(2, 10**6 + 2):
            s += 1 / log(i)
        assert abs(s - EX1_FIRST_BLOCK_1E6) < mpmath.mpf("1e-20")
