import os
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gradgate import _fallback
from gradgate.kernels import BACKEND, available_backends

BACKENDS = available_backends()
finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)
any_finite = st.floats(allow_nan=False, allow_infinity=False)


def exact_reference(a, b):
    """Correctly rounded dot product via rational arithmetic; OverflowError past the double range."""
    return float(sum(Fraction(x) * Fraction(y) for x, y in zip(a.tolist(), b.tolist())))


def outcome(fn, *args):
    try:
        return fn(*args)
    except OverflowError:
        return "overflow"


def test_compiled_backend_is_selected_when_built():
    assert BACKEND in BACKENDS
    forced = os.environ.get("GRADGATE_PURE_PYTHON", "") not in ("", "0")
    if forced:
        assert BACKEND == "python"
    elif "cython" in BACKENDS:
        assert BACKEND == "cython"


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_matches_rational_reference(name, rng):
    exact_dot, _ = BACKENDS[name]
    for n in (1, 2, 7, 100, 1000):
        a, b = rng.standard_normal(n), rng.standard_normal(n)
        assert exact_dot(a, b) == exact_reference(a, b)


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_ill_conditioned_sum_is_exact(name):
    exact_dot, _ = BACKENDS[name]
    a = np.array([1e16, 1.0, -1e16, 1e-8])
    b = np.ones(4)
    assert exact_dot(a, b) == 1.00000001
    assert float(np.dot(a, b)) != 1.00000001


@given(st.integers(1, 64).flatmap(lambda n: st.tuples(arrays(np.float64, n, elements=finite), arrays(np.float64, n, elements=finite))))
@settings(max_examples=200, deadline=None)
def test_backends_agree_bitwise(pair):
    a, b = pair
    values = {name: fns[0](a, b) for name, fns in BACKENDS.items()}
    assert len(set(values.values())) == 1
    assert values["python"] == exact_reference(a, b)


@given(st.integers(1, 32).flatmap(lambda n: st.tuples(arrays(np.float64, n, elements=any_finite), arrays(np.float64, n, elements=any_finite))))
@settings(max_examples=300, deadline=None)
def test_full_double_range_is_exact(pair):
    a, b = pair
    want = outcome(exact_reference, a, b)
    for name, (dot, terms) in BACKENDS.items():
        assert outcome(dot, a, b) == want, name
        got = outcome(terms, a, b)
        if got != "overflow":
            assert got[0] == want


EDGE_CASES = [
    ([1e-160, 1e-160], [1e-160, 3e-160]),  # subnormal result
    ([1e-200], [1e-100]),  # product underflows to zero
    ([2.0 ** -500, 1.0], [2.0 ** -500, 2.0 ** -1000]),  # tiny products that matter
    ([1e300, 1.0], [1e-10, 1.0]),  # split of a huge input overflows
    ([1e308, 1e308, -1e308], [1.0, 1.0, 1.0]),  # partial sums overflow, result fits
    ([1.7e308, 1e-300], [1.0, 1e-300]),  # huge and subnormal-scale terms together
]


@pytest.mark.parametrize("name", sorted(BACKENDS))
@pytest.mark.parametrize("a,b", EDGE_CASES)
def test_extreme_magnitudes(name, a, b):
    dot, terms = BACKENDS[name]
    a, b = np.array(a), np.array(b)
    assert dot(a, b) == exact_reference(a, b)
    want = [outcome(exact_reference, x, y) for x, y in ((a, b), (a, a), (b, b))]
    # any overflowing term makes the whole call raise
    assert outcome(terms, a, b) == ("overflow" if "overflow" in want else tuple(want))


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_angle_terms(name, rng):
    _, angle_terms = BACKENDS[name]
    a, b = rng.standard_normal(50), rng.standard_normal(50)
    assert angle_terms(a, b) == (exact_reference(a, b), exact_reference(a, a), exact_reference(b, b))


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_errors(name):
    exact_dot, _ = BACKENDS[name]
    with pytest.raises(ValueError):
        exact_dot(np.ones(3), np.ones(4))
    with pytest.raises(OverflowError):
        exact_dot(np.array([1e200]), np.array([1e200]))


def test_fallback_accepts_lists():
    assert _fallback.exact_dot([1.0, 2.0], [3.0, 4.0]) == 11.0
