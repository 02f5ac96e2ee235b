"""Choose which parameter group to monitor for the next optimization step.

Each group keeps a short history of how much its angle dropped over a
round (largest minus smallest angle).  Groups whose direction gains more
from accumulation get sampled more often; Gumbel noise keeps every group
in play.
"""
from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class SamplerMode(str, enum.Enum):
    POWER_NORM = "power"
    NORMALIZED_SOFTMAX = "softmax"


@dataclass(frozen=True)
class SamplerConfig:
    beta: float = 3.0
    mode: SamplerMode = SamplerMode.POWER_NORM
    window_len: int = 5
    rng_seed: int = 0

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if self.window_len < 1:
            raise ValueError(f"window_len must be >= 1, got {self.window_len}")
        object.__setattr__(self, "mode", SamplerMode(self.mode))


@dataclass
class GroupStats:
    group_id: int
    window_len: int = 5
    delta_history: deque = field(default=None)

    def __post_init__(self):
        if self.window_len < 1:
            raise ValueError("window_len must be >= 1")
        self.delta_history = deque(self.delta_history or (), maxlen=self.window_len)

    @property
    def mean_delta(self) -> float | None:
        if not self.delta_history:
            return None
        return math.fsum(self.delta_history) / len(self.delta_history)


def round_delta(angles: Sequence[float], mode: SamplerMode = SamplerMode.POWER_NORM) -> float:
    """Spread of the angles recorded in one round.

    In softmax mode the spread is divided by the largest angle so values
    from different groups live on the same [0, 1] scale.
    """
    if len(angles) == 0:
        raise ValueError("round_delta needs at least one angle")
    a_max, a_min = max(angles), min(angles)
    delta = a_max - a_min
    if SamplerMode(mode) is SamplerMode.NORMALIZED_SOFTMAX:
        return delta / a_max if a_max > 0 else 0.0
    return delta


def gumbel_noise(u):
    """Standard Gumbel variate(s) from uniform draw(s) in (0, 1)."""
    return -np.log(-np.log(u))


def perturb(mean_delta: float, u: float) -> float:
    if not 0.0 < u < 1.0:
        raise ValueError(f"u must lie in (0, 1), got {u}")
    return mean_delta - math.log(-math.log(u))


def normalize_probs(
    values: Sequence[float],
    beta: float = 3.0,
    mode: SamplerMode = SamplerMode.POWER_NORM,
) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("normalize_probs needs at least one value")
    if SamplerMode(mode) is SamplerMode.NORMALIZED_SOFTMAX:
        e = np.exp(v - v.max())
        return e / e.sum()
    if not beta > 0:
        raise ValueError(f"beta must be > 0, got {beta}")
    v = np.maximum(v, 0.0)
    # divide by the max first: scale invariance and no overflow for large beta
    top = v.max()
    if top == 0.0:
        return np.full(v.size, 1.0 / v.size)
    w = (v / top) ** beta
    return w / w.sum()


def _uniform_open(rng: np.random.Generator, size: int) -> np.ndarray:
    u = rng.random(size)
    while (u == 0.0).any():
        u[u == 0.0] = rng.random(int((u == 0.0).sum()))
    return u


def selection_probs(
    stats: Sequence[GroupStats],
    cfg: SamplerConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Draw fresh noise and return the per-group sampling distribution."""
    means = [s.mean_delta for s in stats]
    seen = [m for m in means if m is not None]
    # unvisited groups start at the best known mean so they get measured early
    fill = max(seen) if seen else 0.0
    base = np.array([fill if m is None else m for m in means], dtype=np.float64)
    perturbed = base + gumbel_noise(_uniform_open(rng, base.size))
    return normalize_probs(perturbed, cfg.beta, cfg.mode)


def sample_group(
    stats: Sequence[GroupStats],
    cfg: SamplerConfig,
    rng: np.random.Generator,
) -> int:
    if len(stats) == 0:
        raise ValueError("sample_group needs at least one group")
    p = selection_probs(stats, cfg, rng)
    cdf = np.cumsum(p)
    idx = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return stats[min(idx, len(stats) - 1)].group_id


def record_round(
    stats: GroupStats,
    angles: Sequence[float],
    mode: SamplerMode = SamplerMode.POWER_NORM,
) -> GroupStats:
    stats.delta_history.append(round_delta(angles, mode))
    return stats
