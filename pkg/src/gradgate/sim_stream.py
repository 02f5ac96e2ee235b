"""Synthetic mini-batch gradients: fixed signal direction plus isotropic noise."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grad_vector import GradVector, angle_deg

SCHEDULES = ("constant", "linear", "exp")


@dataclass(frozen=True)
class StreamConfig:
    """``mu_norm(t)`` is ``mu0`` shaped by ``schedule`` over optimization step t.

    linear: ``mu0 * max(0, 1 - decay * t)``; exp: ``mu0 * exp(-decay * t)``.
    """

    dim: int = 512
    sigma: float = 1.0
    mu0: float = 16.0
    schedule: str = "exp"
    decay: float = 0.005
    seed: int = 0
    minibatch_size_units: int = 100
    groups: int = 4

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError(f"dim must be >= 2, got {self.dim}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if self.mu0 < 0 or self.decay < 0:
            raise ValueError("mu0 and decay must be >= 0")
        if self.schedule not in SCHEDULES:
            raise ValueError(f"schedule must be one of {SCHEDULES}, got {self.schedule!r}")
        if self.minibatch_size_units < 1:
            raise ValueError("minibatch_size_units must be >= 1")
        if not 1 <= self.groups <= self.dim:
            raise ValueError(f"groups must be in [1, dim], got {self.groups}")

    def mu_norm(self, t: int) -> float:
        if self.schedule == "constant":
            return self.mu0
        if self.schedule == "linear":
            return self.mu0 * max(0.0, 1.0 - self.decay * t)
        return self.mu0 * math.exp(-self.decay * t)

    def group_bounds(self) -> list[tuple[int, int]]:
        """Contiguous, near-equal slices of the vector used as parameter groups."""
        edges = np.linspace(0, self.dim, self.groups + 1).round().astype(int)
        return [(int(lo), int(hi)) for lo, hi in zip(edges[:-1], edges[1:])]


def signal_direction(dim: int) -> np.ndarray:
    return np.full(dim, 1.0 / math.sqrt(dim))


def make_rng(cfg: StreamConfig) -> np.random.Generator:
    # PCG64 streams are reproducible across platforms for a given seed
    return np.random.Generator(np.random.PCG64(cfg.seed))


def next_gradient(cfg: StreamConfig, t: int, rng: np.random.Generator) -> GradVector:
    return GradVector(next_gradient_array(cfg, t, rng))


def next_gradient_array(cfg: StreamConfig, t: int, rng: np.random.Generator) -> np.ndarray:
    noise = rng.standard_normal(cfg.dim)
    mu = cfg.mu_norm(t)
    if mu == 0.0:
        return cfg.sigma * noise
    return mu * signal_direction(cfg.dim) + cfg.sigma * noise


class GradientStream:
    """Stateful wrapper: one rng, mini-batches drawn in order."""

    def __init__(self, cfg: StreamConfig):
        self.cfg = cfg
        self.rng = make_rng(cfg)

    def next(self, t: int) -> np.ndarray:
        return next_gradient_array(self.cfg, t, self.rng)


def expected_pure_noise_angle(k: int) -> float:
    """High-dimension limit of the accumulation angle at mini-batch k (degrees).

    With zero signal the k-th mini-batch is nearly orthogonal to the sum of the
    previous k-1, and 1/sqrt(k-1) times its length.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    return math.degrees(math.acos(math.sqrt((k - 1) / k)))


def accumulation_angles(cfg: StreamConfig, kmax: int, rng: np.random.Generator, t: int = 0) -> list[float]:
    """Angles between consecutive accumulated gradients for k = 2..kmax."""
    acc = GradVector(next_gradient_array(cfg, t, rng))
    out = []
    for _ in range(2, kmax + 1):
        new = GradVector(acc.values + next_gradient_array(cfg, t, rng))
        out.append(angle_deg(acc, new))
        acc = new
    return out
