import numpy as np
import pytest

from gradgate.kernels import available_backends

BACKENDS = available_backends()


@pytest.fixture(params=sorted(BACKENDS))
def backend(request, monkeypatch):
    """Route grad_vector through one kernel backend at a time."""
    from gradgate import kernels

    exact_dot, angle_terms = BACKENDS[request.param]
    monkeypatch.setattr(kernels, "exact_dot", exact_dot)
    monkeypatch.setattr(kernels, "angle_terms", angle_terms)
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
