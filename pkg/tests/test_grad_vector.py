import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gradgate.grad_vector import (
    NORM_FLOOR,
    DegenerateGradient,
    GradVector,
    accumulate,
    angle_deg,
    dot,
    norm,
)

comp = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False)
vec3 = arrays(np.float64, 3, elements=comp)


def V(*xs):
    return GradVector(xs)


class TestGradVector:
    def test_construction(self):
        v = V(1, 2, 3)
        assert v.dim == 3
        assert v.values.dtype == np.float64

    def test_immutable(self):
        v = V(1, 2)
        with pytest.raises(ValueError):
            v.values[0] = 5.0
        src = np.array([1.0, 2.0])
        w = GradVector(src)
        src[0] = 9.0
        assert w.values[0] == 1.0

    @pytest.mark.parametrize("bad", [[], [1.0, float("nan")], [float("inf")]])
    def test_rejects_invalid(self, bad):
        with pytest.raises(ValueError):
            GradVector(bad)

    def test_accumulate_rejects_overflow(self):
        with pytest.raises(ValueError):
            accumulate(V(1e308), V(1e308))


def test_dot_examples(backend):
    assert dot(V(1, 0), V(0, 1)) == 0
    assert dot(V(1, 2), V(3, 4)) == 11
    v = V(0.3, -1.7, 2.2)
    assert dot(v, v) == pytest.approx(norm(v) ** 2, rel=1e-15)


def test_norm_examples(backend):
    assert norm(V(0, 0, 0)) == 0
    assert norm(V(3, 4)) == 5
    assert norm(V(1, 1, 1, 1)) == 2


def test_accumulate_examples():
    assert accumulate(V(1, 2), V(3, 4)) == V(4, 6)
    v = V(1.5, -2.5)
    assert accumulate(v, GradVector.zeros(2)) == v


def test_accumulate_order_independent(rng):
    grads = [GradVector(rng.standard_normal(200)) for _ in range(20)]
    ref = [sum(Fraction(float(g.values[i])) for g in grads) for i in range(200)]
    for perm in range(5):
        order = rng.permutation(len(grads))
        acc = GradVector.zeros(200)
        for i in order:
            acc = accumulate(acc, grads[i])
        rel = [abs(float(Fraction(acc.values[i]) - ref[i])) / max(1.0, abs(float(ref[i]))) for i in range(200)]
        assert max(rel) < 1e-13


def test_dim_mismatch(backend):
    for op in (dot, accumulate, angle_deg):
        with pytest.raises(ValueError):
            op(V(1, 2), V(1, 2, 3))


def test_angle_examples(backend):
    v = V(0.3, -1.7, 2.2)
    assert angle_deg(v, v) == 0.0
    assert angle_deg(v, -v) == 180.0
    assert angle_deg(V(1, 0), V(0, 1)) == 90.0
    assert angle_deg(V(1, 0), V(1, 1)) == pytest.approx(45.0, abs=1e-12)


def test_angle_degenerate(backend):
    with pytest.raises(DegenerateGradient):
        angle_deg(V(0, 0), V(1, 0))
    with pytest.raises(DegenerateGradient):
        angle_deg(V(1, 0), V(NORM_FLOOR / 2, 0))
    assert angle_deg(V(1, 0), V(NORM_FLOOR * 10, NORM_FLOOR * 10)) == pytest.approx(45.0)


def test_angle_clamp_near_parallel(backend):
    # cosine can round past 1 for nearly parallel long vectors
    rng = np.random.default_rng(7)
    for _ in range(200):
        a = rng.standard_normal(1000)
        b = a * (1 + 1e-17 * rng.standard_normal())
        ang = angle_deg(GradVector(a), GradVector(b))
        assert ang == 0.0


@given(vec3, vec3)
@settings(max_examples=300, deadline=None)
def test_angle_symmetric_and_bounded(a, b):
    assume(np.linalg.norm(a) > 1e-3 and np.linalg.norm(b) > 1e-3)
    x, y = GradVector(a), GradVector(b)
    assert angle_deg(x, y) == angle_deg(y, x)
    assert 0.0 <= angle_deg(x, y) <= 180.0


@given(vec3, st.sampled_from([0.25, 0.5, 2.0, 8.0, 1024.0]))
@settings(max_examples=200, deadline=None)
def test_angle_exactly_zero_or_180_for_power_of_two_scaling(a, s):
    assume(np.linalg.norm(a) > 1e-3)
    x = GradVector(a)
    assert angle_deg(x, x.scale(s)) == 0.0
    assert angle_deg(x, x.scale(-s)) == 180.0


@given(vec3, st.floats(1e-3, 1e3))
@settings(max_examples=200, deadline=None)
def test_angle_parallel_general_scale(a, s):
    assume(np.linalg.norm(a) > 1e-3)
    x = GradVector(a)
    assert angle_deg(x, x.scale(s)) == 0.0
    assert angle_deg(x, x.scale(-s)) == 180.0


def test_smallest_resolved_angle(backend):
    assert angle_deg(V(1, 0), V(1, 1e-5)) == pytest.approx(math.degrees(1e-5), rel=1e-6)
    assert angle_deg(V(1, 0), V(1, 1e-9)) == 0.0


@given(vec3, vec3, st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
@settings(max_examples=300, deadline=None)
def test_angle_scale_invariant(a, b, s, t):
    assume(np.linalg.norm(a) > 1e-2 and np.linalg.norm(b) > 1e-2)
    x, y = GradVector(a), GradVector(b)
    base = angle_deg(x, y)
    # keep away from 0/180 where arccos is ill-conditioned
    assume(1e-3 < base < 180 - 1e-3)
    assert abs(angle_deg(x.scale(s), y.scale(t)) - base) < 1e-9


def test_matches_rational_reference(backend, rng):
    for _ in range(20):
        n = int(rng.integers(1, 500))
        a, b = rng.standard_normal(n) * 10.0 ** rng.integers(-5, 5), rng.standard_normal(n)
        fa, fb = [Fraction(x) for x in a.tolist()], [Fraction(x) for x in b.tolist()]
        exact = sum(x * y for x, y in zip(fa, fb))
        got = dot(GradVector(a), GradVector(b))
        assert abs(Fraction(got) - exact) <= abs(exact) * Fraction(1, 10**12)
        exact_nn = sum(x * x for x in fa)
        assert abs(norm(GradVector(a)) ** 2 - float(exact_nn)) <= float(exact_nn) * 1e-12
        s = accumulate(GradVector(a), GradVector(b))
        for i in range(n):
            exact_sum = fa[i] + fb[i]
            assert abs(float(Fraction(s.values[i]) - exact_sum)) <= abs(float(exact_sum)) * 1e-12
