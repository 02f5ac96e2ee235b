"""Per-round stop rule for gradient accumulation.

A round accumulates mini-batch gradients and measures the angle between
the accumulated gradient before and after each new mini-batch.  The round
stops once an angle exceeds ``alpha`` times the smallest angle seen so far
in the same round, i.e. once the accumulated direction starts to fluctuate.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

from .grad_vector import GradVector, angle_deg


class DegeneratePolicy(str, enum.Enum):
    SKIP_ANGLE = "skip"
    FORCE_STEP = "force_step"


class Verdict(str, enum.Enum):
    OPEN = "open"
    STOPPED_FLUCTUATION = "fluct"
    STOPPED_CAP = "cap"


class Decision(enum.Enum):
    CONTINUE = "continue"
    FLUCTUATION = "fluct"
    CAP = "cap"

    @property
    def is_step(self) -> bool:
        return self is not Decision.CONTINUE


@dataclass(frozen=True)
class ControllerConfig:
    alpha: float = 1.1
    min_minibatches: int = 2
    max_minibatches: int = 64
    degenerate_policy: DegeneratePolicy = DegeneratePolicy.SKIP_ANGLE
    # ablation: ignore angles and always stop (as Cap) after exactly this many
    fixed_k: int | None = None

    def __post_init__(self):
        if not self.alpha >= 1.0:
            raise ValueError(f"alpha must be >= 1.0, got {self.alpha}")
        if self.min_minibatches < 2:
            raise ValueError(f"min_minibatches must be >= 2, got {self.min_minibatches}")
        if self.max_minibatches < self.min_minibatches:
            raise ValueError(
                f"max_minibatches ({self.max_minibatches}) must be >= "
                f"min_minibatches ({self.min_minibatches})"
            )
        if self.fixed_k is not None and self.fixed_k < 1:
            raise ValueError(f"fixed_k must be >= 1, got {self.fixed_k}")
        object.__setattr__(self, "degenerate_policy", DegeneratePolicy(self.degenerate_policy))


@dataclass
class AccumRound:
    k: int = 0
    angles: list[float] = field(default_factory=list)
    size_units: int = 0
    verdict: Verdict = Verdict.OPEN

    @property
    def a_min(self) -> float | None:
        """Minimum over all angles except the most recent one."""
        if len(self.angles) < 2:
            return None
        return min(self.angles[:-1])

    @property
    def reference(self) -> float | None:
        """Threshold base for the next angle: minimum of every angle so far."""
        return min(self.angles) if self.angles else None


@dataclass(frozen=True)
class BatchRecord:
    k: int
    size_units: int
    a_min: float | None
    verdict: Verdict
    angles: tuple[float, ...]

    def to_json(self, step: int) -> dict:
        return {
            "step": step,
            "k": self.k,
            "size": self.size_units,
            "a_min": self.a_min,
            "verdict": self.verdict.value,
            "angles": list(self.angles),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "BatchRecord":
        return cls(
            k=obj["k"],
            size_units=obj["size"],
            a_min=obj["a_min"],
            verdict=Verdict(obj["verdict"]),
            angles=tuple(float(a) for a in obj["angles"]),
        )


def begin_round() -> AccumRound:
    return AccumRound()


def observe_minibatch(
    rnd: AccumRound,
    angle: float | None,
    cfg: ControllerConfig,
    size_units: int = 0,
) -> Decision:
    """Count one mini-batch and decide whether to keep accumulating.

    ``angle`` is the angle between the accumulated gradient before and after
    this mini-batch; it is None for the first mini-batch of a round and for
    degenerate (near-zero) gradients.
    """
    if rnd.verdict is not Verdict.OPEN:
        raise RuntimeError("round already stopped; call begin_round()")
    if angle is not None and not 0.0 <= angle <= 180.0:
        raise ValueError(f"angle out of range: {angle}")

    degenerate = angle is None and rnd.k >= 1
    reference = rnd.reference
    rnd.k += 1
    rnd.size_units += size_units
    if angle is not None:
        rnd.angles.append(float(angle))

    if cfg.fixed_k is not None:
        if rnd.k >= cfg.fixed_k:
            rnd.verdict = Verdict.STOPPED_CAP
            return Decision.CAP
        return Decision.CONTINUE

    if (
        angle is not None
        and reference is not None
        and rnd.k >= cfg.min_minibatches
        and angle > reference * cfg.alpha
    ):
        rnd.verdict = Verdict.STOPPED_FLUCTUATION
        return Decision.FLUCTUATION
    if rnd.k >= cfg.max_minibatches or (
        degenerate and cfg.degenerate_policy is DegeneratePolicy.FORCE_STEP
    ):
        rnd.verdict = Verdict.STOPPED_CAP
        return Decision.CAP
    return Decision.CONTINUE


def finalize_round(rnd: AccumRound) -> BatchRecord:
    if rnd.verdict is Verdict.OPEN:
        raise RuntimeError("cannot finalize an open round")
    return BatchRecord(
        k=rnd.k,
        size_units=rnd.size_units,
        a_min=rnd.a_min,
        verdict=rnd.verdict,
        angles=tuple(rnd.angles),
    )


def replay(angles: Sequence[float], cfg: ControllerConfig) -> tuple[Decision, AccumRound]:
    """Feed a recorded angle trace (one angle per mini-batch after the first).

    Returns the last decision and the round; the decision is CONTINUE when
    the trace ran out before any stop.
    """
    rnd = begin_round()
    decision = observe_minibatch(rnd, None, cfg)
    for a in angles:
        if decision.is_step:
            break
        decision = observe_minibatch(rnd, a, cfg)
    return decision, rnd


def consistency_gap(
    snapshots: Sequence[GradVector],
    n: int,
    angles: Sequence[float] | None = None,
) -> float:
    """Sum of consecutive direction changes minus the end-to-end change.

    ``snapshots`` are accumulated gradients, oldest first; the last ``n + 2``
    of them are used.  When ``angles`` is given, its last ``n + 1`` entries
    are taken as the consecutive angles instead of recomputing them.  Close
    to zero when the direction moves consistently, large when it wanders.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if len(snapshots) < n + 2:
        raise ValueError(f"need {n + 2} snapshots, got {len(snapshots)}")
    window = list(snapshots[-(n + 2):])
    if angles is None:
        steps = [angle_deg(window[i], window[i + 1]) for i in range(n + 1)]
    else:
        if len(angles) < n + 1:
            raise ValueError(f"need {n + 1} angles, got {len(angles)}")
        steps = list(angles[-(n + 1):])
    return sum(steps) - angle_deg(window[0], window[-1])


def consistency_gap_from_angles(step_angles: Sequence[float], span_angle: float) -> float:
    """Same diagnostic when only the recorded angles are available."""
    if not step_angles:
        raise ValueError("need at least one consecutive angle")
    return sum(step_angles) - span_angle
