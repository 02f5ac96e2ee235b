"""Select the compiled kernels when available, else the pure-Python ones.

Set ``GRADGATE_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _fallback

BACKEND = "python"

if os.environ.get("GRADGATE_PURE_PYTHON", "") not in ("", "0"):
    from ._fallback import angle_terms, exact_dot
else:
    try:
        from ._kernels import angle_terms, exact_dot

        BACKEND = "cython"
    except ImportError:
        from ._fallback import angle_terms, exact_dot


def available_backends():
    """Map backend name to its ``(exact_dot, angle_terms)`` pair."""
    found = {"python": (_fallback.exact_dot, _fallback.angle_terms)}
    try:
        from . import _kernels
    except ImportError:
        return found
    found["cython"] = (_kernels.exact_dot, _kernels.angle_terms)
    return found


__all__ = ["BACKEND", "angle_terms", "available_backends", "exact_dot"]
