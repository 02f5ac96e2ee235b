# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for exact inner products.

Each product is split into ``p + e`` with a fused multiply-add, and the
stream of terms is summed with non-overlapping partials followed by the
same half-even correction ``math.fsum`` applies.  The result is the
correctly rounded value of the exact dot product, so it is bit-identical
to the pure-Python fallback.  Inputs the fast path cannot handle exactly
are handed to the fallback's integer slow path.
"""
from libc.math cimport fma, fabs, isfinite

import numpy as np

from gradgate._fallback import exact_dot_slow

cdef double TINY_PRODUCT = 2.0 ** -969

cdef enum:
    MAX_PARTIALS = 128


cdef struct Partials:
    int n
    double p[MAX_PARTIALS]


cdef inline void _add(Partials* acc, double x) noexcept nogil:
    cdef int i = 0
    cdef int j
    cdef double y, t, hi, lo
    for j in range(acc.n):
        y = acc.p[j]
        if fabs(x) < fabs(y):
            t = x
            x = y
            y = t
        hi = x + y
        lo = y - (hi - x)
        if lo != 0.0:
            acc.p[i] = lo
            i += 1
        x = hi
    acc.n = i
    if x != 0.0:
        acc.p[acc.n] = x
        acc.n += 1


cdef inline double _round(Partials* acc) noexcept nogil:
    cdef int n = acc.n
    cdef double hi = 0.0
    cdef double lo = 0.0
    cdef double x, y, yr
    if n > 0:
        n -= 1
        hi = acc.p[n]
        while n > 0:
            x = hi
            n -= 1
            y = acc.p[n]
            hi = x + y
            yr = hi - x
            lo = y - yr
            if lo != 0.0:
                break
        if n > 0 and ((lo < 0.0 and acc.p[n - 1] < 0.0) or
                      (lo > 0.0 and acc.p[n - 1] > 0.0)):
            y = lo * 2.0
            x = hi + y
            yr = x - hi
            if y == yr:
                hi = x
    return hi


cdef inline bint _finite(Partials* acc) noexcept nogil:
    cdef int j
    for j in range(acc.n):
        if not isfinite(acc.p[j]):
            return False
    return True


cdef inline bint _feed(Partials* acc, double a, double b) noexcept nogil:
    # False when p + e would not be exact: overflow or a near-subnormal product
    cdef double p = a * b
    if not isfinite(p) or (fabs(p) < TINY_PRODUCT and a != 0.0 and b != 0.0):
        return False
    _add(acc, p)
    _add(acc, fma(a, b, -p))
    return True


def _as_array(const double[::1] v):
    return np.asarray(v)


def exact_dot(const double[::1] a, const double[::1] b):
    """Correctly rounded sum of ``a[i] * b[i]``."""
    if a.shape[0] != b.shape[0]:
        raise ValueError("dimension mismatch: %d vs %d" % (a.shape[0], b.shape[0]))
    cdef Partials acc
    cdef Py_ssize_t i
    cdef bint ok = True
    acc.n = 0
    with nogil:
        for i in range(a.shape[0]):
            if not _feed(&acc, a[i], b[i]):
                ok = False
                break
        ok = ok and _finite(&acc)
    if not ok:
        return exact_dot_slow(_as_array(a), _as_array(b))
    return _round(&acc)


def angle_terms(const double[::1] a, const double[::1] b):
    """Return ``(a.b, a.a, b.b)``, each correctly rounded, in one pass."""
    if a.shape[0] != b.shape[0]:
        raise ValueError("dimension mismatch: %d vs %d" % (a.shape[0], b.shape[0]))
    cdef Partials ab, aa, bb
    cdef Py_ssize_t i
    cdef bint ok = True
    ab.n = 0
    aa.n = 0
    bb.n = 0
    with nogil:
        for i in range(a.shape[0]):
            if not (_feed(&ab, a[i], b[i]) and _feed(&aa, a[i], a[i])
                    and _feed(&bb, b[i], b[i])):
                ok = False
                break
        ok = ok and _finite(&ab) and _finite(&aa) and _finite(&bb)
    if not ok:
        x, y = _as_array(a), _as_array(b)
        return exact_dot_slow(x, y), exact_dot_slow(x, x), exact_dot_slow(y, y)
    return _round(&ab), _round(&aa), _round(&bb)
