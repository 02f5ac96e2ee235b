"""Pure-Python versions of the compiled kernels.

Products are made error-free with Dekker's split, and ``math.fsum`` rounds
the exact sum once.  Inputs where that is not exact (products near the
subnormal range, splits or partial sums that overflow) go through
:func:`exact_dot_slow`, which both backends share.
"""
import math

import numpy as np

_SPLITTER = 134217729.0  # 2**27 + 1
# below this a product's rounding error is no longer a double
TINY_PRODUCT = 2.0 ** -969
_SHIFT = 1074  # every double is an integer multiple of 2**-1074


def _split(x):
    c = _SPLITTER * x
    hi = c - (c - x)
    return hi, x - hi


def _scaled_int(x: float) -> int:
    n, d = x.as_integer_ratio()
    return n * ((1 << _SHIFT) // d)


def exact_dot_slow(a, b) -> float:
    """Correctly rounded dot product in integer arithmetic; any finite input."""
    total = sum(_scaled_int(x) * _scaled_int(y) for x, y in zip(a.tolist(), b.tolist()))
    try:
        return total / (1 << (2 * _SHIFT))
    except OverflowError:
        raise OverflowError("inner product overflows double precision") from None


def exact_dot(a, b):
    """Correctly rounded sum of ``a[i] * b[i]``."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    with np.errstate(all="ignore"):
        p = a * b
        ah, al = _split(a)
        bh, bl = _split(b)
        e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
        tiny = (np.abs(p) < TINY_PRODUCT) & (a != 0) & (b != 0)
    if tiny.any() or not (np.isfinite(p).all() and np.isfinite(e).all()):
        return exact_dot_slow(a, b)
    try:
        return math.fsum(np.concatenate((p, e)).tolist())
    except OverflowError:  # intermediate overflow
        return exact_dot_slow(a, b)


def angle_terms(a, b):
    """Return ``(a.b, a.a, b.b)``, each correctly rounded."""
    return exact_dot(a, b), exact_dot(a, a), exact_dot(b, b)
