import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bayes_series import catalog
from bayes_series.catalog import (EPS, BoundSpec, bound, bounds, check_block_size,
                                  check_monotonicity, make_series, reference_block_sums)
from bayes_series.errors import DomainError, MissingReferenceError
from bayes_series.summation import BlockPlan, block_sum
from oracles import mp_sum, trial_mobius


class TestTerms:
    def test_example1(self):
        assert make_series("example1").term(math.e**2) == pytest.approx(0.5, rel=1e-15)

    def test_alternating(self):
        s = make_series("alternating_unit")
        assert (s.term(1), s.term(2), s.term(3)) == (1.0, -1.0, 1.0)

    def test_mobius_dirichlet_zero_at_4(self):
        s = make_series("mobius_dirichlet", a=1.0)
        assert s.term(4) == 0.0 == trial_mobius(4)
        assert s.term(6) == pytest.approx(1 / 6)
        assert s.term(7) == pytest.approx(-1 / 7)

    def test_start_indices(self):
        starts = {sid: make_series(sid, **{p: 1.0 for p in catalog.describe(sid)["params"]}
                                   ).start_index
                  for sid in ("example1", "example4", "example5", "alternating_unit",
                              "euler_zeta", "example7")}
        assert starts == {"example1": 2, "example4": 3, "example5": 5, "alternating_unit": 1,
                          "euler_zeta": 1, "example7": 1}

    @pytest.mark.parametrize("sid,theta", [
        ("example2", {"a": 1.3}),
        ("example3", {"a": 2.0}),
        ("example4", {"a": 1.2, "b": 0.4}),
        ("example5", {"a": 2.0, "b": 1.0}),
        ("example6", {"a": 1e-10, "b": 1.0}),
        ("example7", {"a": 1 / math.pi, "b": 1.5}),
        ("euler_zeta", {"a": 1.5}),
    ])
    def test_terms_vs_high_precision(self, sid, theta):
        s = make_series(sid, **theta)
        a, b = theta.get("a"), theta.get("b")
        mp = mpmath

        def f(i):
            li = mp.log(i)
            if sid == "example2":
                return (1 - li / i - a * mp.log(li) / i) ** i
            if sid == "example3":
                return (1 - li / i * mp.mpf(a) ** (mp.log(li) / li)) ** i
            if sid == "example4":
                return (1 - li / i - mp.log(li) / i * mp.cos(1 / i) ** 2
                        * (a + (-1) ** int(i) * b)) ** i
            if sid == "example5":
                return (1 - li / i * (a * (1 + mp.sin(mp.sqrt(mp.log(li) / li)) ** 2)
                                      + b * mp.sin(i * mp.pi / 4))) ** i
            if sid == "example6":
                return i ** (b - 3) / (mp.mpf(a) + abs(mp.sin(i)))
            if sid == "example7":
                return abs(mp.sin(mp.mpf(a) * mp.pi * i)) ** i / i ** b
            return i ** (-a)

        with mp.workdps(40):
            for i in [s.start_index, s.start_index + 1, 17, 1000, 123457, 10**6 + 3]:
                ref = f(mp.mpf(i))
                got = s.term(i)
                assert abs(got - ref) <= 1e-11 * abs(ref) + 1e-300, (i, got, ref)

    def test_finite_over_domain(self):
        idx = np.arange(5, 200005)
        for sid, th in [("example2", {"a": 50.0}), ("example3", {"a": 0.01}),
                        ("example4", {"a": 0.0, "b": 0.0}), ("example5", {"a": 1e-3, "b": 9.0}),
                        ("example6", {"a": -1e-10, "b": 0.0}), ("example7", {"a": 0.5, "b": 1.0})]:
            assert np.isfinite(make_series(sid, **th).terms(idx)).all(), sid

    @pytest.mark.parametrize("sid,theta", [("example5", {"a": 0.0, "b": 1.0}),
                                           ("example5", {"a": 1.0, "b": -1.0}),
                                           ("example3", {"a": -1.0}),
                                           ("example4", {"a": -0.1, "b": 0.0}),
                                           ("example6", {"a": 1e-3, "b": 0.0}),
                                           ("example7", {"a": 1.0, "b": 0.5}),
                                           ("example2", {"a": math.nan})])
    def test_domain_errors(self, sid, theta):
        with pytest.raises(DomainError):
            make_series(sid, **theta)

    def test_wrong_parameter_names(self):
        with pytest.raises(DomainError):
            make_series("example2", b=1.0)
        with pytest.raises(DomainError):
            make_series("nope")

    def test_below_start(self):
        with pytest.raises(DomainError):
            make_series("example5", a=1.0, b=1.0).term(4)

    def test_block_size_rules(self):
        check_block_size("example4", 100)
        check_block_size("example5", 104)
        with pytest.raises(DomainError):
            check_block_size("example4", 101)
        with pytest.raises(DomainError):
            check_block_size("example5", 102)

    def test_specs_are_hashable_values(self):
        assert make_series("example2", a=1.0) == make_series("example2", a=1.0)
        assert len({make_series("example2", a=1.0), make_series("example2", a=1.0)}) == 1


class TestBounds:
    def test_example1(self):
        assert bound(BoundSpec("example1"), 1, 10**6) == pytest.approx(1e-3, rel=1e-15)

    def test_example2_at_reference(self):
        ref = [0.25, 0.125]
        c = bound(BoundSpec("example2"), 2, 1000, {"a": 1 + EPS}, ref)
        assert c > 0.125
        assert c == pytest.approx(0.125 + 1e-11 / math.log(3), rel=1e-12)

    def test_example2_fallback_to_reference(self):
        c = bound(BoundSpec("example2"), 1, 1000, {"a": 0.0}, [0.25])
        assert c == 0.25

    def test_riemann(self):
        ref = [0.0] * 8 + [-0.375]
        assert bound(BoundSpec("riemann"), 9, 100, {"a": 0.0}, ref) == 0.375
        assert bound(BoundSpec("riemann"), 9, 100, {"a": 1.0}, ref) == pytest.approx(0.275)

    def test_example6_margin_switch(self):
        sp = BoundSpec("example6")
        lo = bound(sp, 3, 10, {"a": 0.0, "b": 1.999}, [1.0] * 3)
        hi = bound(sp, 3, 10, {"a": 0.0, "b": 2.0}, [1.0] * 3)
        assert lo - hi == pytest.approx((0.001 + 2e-5) / math.log(4))

    def test_example7(self):
        assert bound(BoundSpec("example7"), 4, 10, {"a": 0.5, "b": 1.0},
                     [0, 0, 0, 0.5]) == 0.5 + EPS / 4

    def test_missing_reference(self):
        with pytest.raises(MissingReferenceError):
            bound(BoundSpec("example2"), 1, 10, {"a": 1.0})
        with pytest.raises(MissingReferenceError):
            bound(BoundSpec("riemann"), 3, 10, {"a": 1.0}, [0.1])

    def test_nonnegative(self):
        c = bound(BoundSpec("example6"), 1, 10, {"a": 0.0, "b": 50.0}, [0.1])
        assert c == 0.0

    def test_reference_parameters(self):
        assert BoundSpec("example3").reference_params() == {"a": math.e + EPS}
        assert BoundSpec("example5").reference_params() == {"a": 1 + EPS, "b": EPS}
        assert BoundSpec("example7").reference_params() == {"a": 1 / math.pi, "b": 1 + EPS}
        assert BoundSpec("example1").reference() is None
        assert BoundSpec("riemann").reference().id == "mobius_dirichlet"


class TestReferenceSums:
    def test_example2_first_block_vs_direct(self):
        s = make_series("example2", a=1 + EPS)
        got = reference_block_sums(s, 1000, 2)[0]
        with mpmath.workdps(50):
            a = mpmath.mpf(1) + mpmath.mpf("1e-10")
            ref = mp_sum(lambda i: (1 - mpmath.log(i) / i
                                    - a * mpmath.log(mpmath.log(i)) / i) ** i, 2, 1001)
            assert abs(got - ref) / ref <= 1e-12

    def test_empty(self):
        assert len(reference_block_sums(make_series("example1"), 10, 0)) == 0

    @pytest.mark.parametrize("bid", ["example2", "example3", "example4", "example5"])
    def test_references_decrease(self, bid):
        ref = reference_block_sums(BoundSpec(bid).reference(), 1000, 300)
        assert np.all(np.diff(ref) < 0)

    def test_disk_cache_roundtrip(self, tmp_path, monkeypatch):
        catalog.clear_memo()
        monkeypatch.setenv(catalog.CACHE_ENV, str(tmp_path))
        s = make_series("example3", a=math.e + EPS)
        first = reference_block_sums(s, 500, 7)
        files = list(tmp_path.glob("*.npy"))
        assert len(files) == 1
        catalog.clear_memo()
        np.save(files[0], first * 0 + 42.0)  # prove the second call reads the file
        assert np.all(reference_block_sums(s, 500, 7) == 42.0)
        catalog.clear_memo()

    def test_example2_indicator_design(self):
        spec = BoundSpec("example2")
        s = make_series("example2", a=1 + EPS)
        ref = reference_block_sums(spec.reference(), 1000, 200)
        sums = np.array([block_sum(s, BlockPlan(2, 1000, j)) for j in range(1, 201)])
        cs = bounds(spec, 1000, 200, s.theta, ref)
        assert np.all(np.abs(sums) <= cs)


# Bound monotonicity over j = 1..1000 for each bound family at its reference
# parameters.  Families built from |sin i| references are not monotone at
# block resolution: single near-resonant terms dominate individual blocks.
MONO_CASES = [
    ("example1", {}, False),
    ("example2", {"a": 1 + EPS}, False),
    ("example3", {"a": math.e + EPS}, False),
    ("example4", {"a": 1 + EPS, "b": 0.0}, False),
    ("example5", {"a": 1 + EPS, "b": EPS}, False),
    ("example6", {"a": EPS, "b": 2 - EPS}, True),
    ("example7", {"a": 1 / math.pi, "b": 1 + EPS}, True),
    ("riemann", {"a": 1.0}, True),
]


@pytest.mark.parametrize("n", [1000, 10000])
@pytest.mark.parametrize("bid,theta,known_bad", MONO_CASES, ids=[c[0] for c in MONO_CASES])
def test_bound_monotone_in_j(request, bid, theta, known_bad, n):
    if known_bad:
        request.applymarker(pytest.mark.xfail(
            strict=True, raises=AssertionError, reason="reference block sums of this family fluctuate in j"))
    K = 1000
    spec = BoundSpec(bid)
    refs = spec.reference()
    ref = reference_block_sums(refs, n, K) if refs is not None else None
    cs = bounds(spec, n, K, theta, ref)
    assert np.all(cs >= 0)
    assert np.all(np.diff(cs) <= 0)


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 3), st.floats(0, 3), st.floats(0.01, 1))
def test_lemma_example4_property(a, b, d):
    s_a, s_ad = check_monotonicity("example4", 1, 100, {"a": a, "b": b}, {"a": a + d, "b": b})
    assert s_a > s_ad
    s_b, s_bd = check_monotonicity("example4", 1, 100, {"a": a, "b": b}, {"a": a, "b": b + d})
    assert s_b < s_bd


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 3), st.floats(0.01, 3), st.floats(0.01, 1))
def test_lemma_example5_property(a, b, d):
    s_a, s_ad = check_monotonicity("example5", 1, 104, {"a": a, "b": b}, {"a": a + d, "b": b})
    assert s_a > s_ad
    s_b, s_bd = check_monotonicity("example5", 1, 104, {"a": a, "b": b}, {"a": a, "b": b + d})
    assert s_b < s_bd


def test_lemma_examples():
    x, y = check_monotonicity("example4", 1, 100, {"a": 1, "b": 0}, {"a": 2, "b": 0})
    assert x > y
    x, y = check_monotonicity("example4", 1, 100, {"a": 1, "b": 0}, {"a": 1, "b": 0.5})
    assert x < y
    x, y = check_monotonicity("example5", 1, 104, {"a": 2, "b": 1}, {"a": 2, "b": 1.5})
    assert x < y


def test_lemma_parity_enforced():
    with pytest.raises(DomainError):
        check_monotonicity("example4", 1, 99, {"a": 1, "b": 0}, {"a": 2, "b": 0})
    with pytest.raises(DomainError):
        check_monotonicity("example5", 1, 102, {"a": 1, "b": 1}, {"a": 2, "b": 1})
    with pytest.raises(DomainError):
        check_monotonicity("example2", 1, 100, {"a": 1}, {"a": 2})
