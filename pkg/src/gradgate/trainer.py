"""Training loop with dynamic batch sizes.

Per optimization step: pick a parameter group to monitor, accumulate
mini-batch gradients until the controller stops the round, then update the
parameters with the mean accumulated gradient.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .controller import (
    BatchRecord,
    ControllerConfig,
    begin_round,
    finalize_round,
    observe_minibatch,
)
from .grad_vector import DegenerateGradient, GradVector, accumulate, angle_deg
from .sampler import GroupStats, SamplerConfig, record_round, sample_group
from .sim_stream import GradientStream, StreamConfig
from .toy_model import DEFAULT_DIMS, loss_and_grads, make_teacher_student

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class OptimizerConfig:
    learning_rate: float = 0.0005
    momentum: float = 0.0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError(f"momentum must be in [0, 1), got {self.momentum}")


@dataclass(frozen=True)
class ToyConfig:
    dims: tuple = DEFAULT_DIMS
    label_noise_sigma: float = 0.1
    minibatch_size: int = 4
    teacher_gain: float = 5.0

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if len(self.dims) < 2 or min(self.dims) < 1:
            raise ValueError(f"invalid dims {self.dims}")
        if self.label_noise_sigma < 0:
            raise ValueError("label_noise_sigma must be >= 0")
        if self.minibatch_size < 1:
            raise ValueError("minibatch_size must be >= 1")
        if not self.teacher_gain > 0:
            raise ValueError("teacher_gain must be > 0")


@dataclass(frozen=True)
class TrainConfig:
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    source: str = "toy"
    sim: StreamConfig = field(default_factory=StreamConfig)
    toy: ToyConfig = field(default_factory=ToyConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    total_steps: int = 2000
    seed: int = 0
    monitor: str = "group"
    update: str = "mean"
    # total mini-batches the data source can deliver; None means unbounded
    data_budget: int | None = None

    def __post_init__(self):
        if self.total_steps < 1:
            raise ValueError(f"total_steps must be >= 1, got {self.total_steps}")
        if self.source not in ("toy", "sim"):
            raise ValueError(f"source must be 'toy' or 'sim', got {self.source!r}")
        if self.monitor not in ("group", "full"):
            raise ValueError(f"monitor must be 'group' or 'full', got {self.monitor!r}")
        if self.update not in ("mean", "sum"):
            raise ValueError(f"update must be 'mean' or 'sum', got {self.update!r}")


@dataclass
class RunReport:
    batch_records: list = field(default_factory=list)
    a_min_trace: list = field(default_factory=list)
    group_counts: list = field(default_factory=list)
    loss_curve: list = field(default_factory=list)
    # (step, monitored group or None, per-group mean delta after the step)
    group_trace: list = field(default_factory=list)
    truncated: bool = False

    @property
    def sizes(self) -> list[int]:
        return [r.size_units for r in self.batch_records]

    @property
    def batch_stats(self) -> dict:
        return batch_stats(self.sizes)


def batch_stats(sizes) -> dict:
    if not sizes:
        raise ValueError("no batches recorded")
    return {"min": min(sizes), "avg": math.fsum(sizes) / len(sizes), "max": max(sizes)}


class SGD:
    """Plain SGD with heavy-ball momentum over a list of flat parameter groups."""

    def __init__(self, learning_rate: float, momentum: float = 0.0):
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.velocity = None

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> list[np.ndarray]:
        if self.velocity is None:
            self.velocity = [np.zeros_like(p) for p in params]
        out = []
        for i, (p, g) in enumerate(zip(params, grads)):
            v = self.momentum * self.velocity[i] + g
            self.velocity[i] = v
            out.append(p - self.learning_rate * v)
        return out


def apply_update(params, grad_sums, k: int, sizes, opt: SGD, update: str = "mean"):
    """One optimizer step from the summed gradients of ``k`` mini-batches.

    Per-mini-batch gradients are batch means, so with equal mini-batch sizes
    the size-weighted mean over the concatenated batch is ``sum / k``.
    """
    if k < 1 or len(sizes) != k:
        raise ValueError(f"need k >= 1 and one size per mini-batch (k={k}, {len(sizes)} sizes)")
    if update == "mean":
        if len(set(sizes)) > 1:
            raise ValueError("mean update assumes equal mini-batch sizes")
        grads = [np.asarray(g, dtype=np.float64) / k for g in grad_sums]
    elif update == "sum":
        grads = [np.asarray(g, dtype=np.float64) for g in grad_sums]
    else:
        raise ValueError(f"unknown update mode {update!r}")
    return opt.step([np.asarray(p, dtype=np.float64) for p in params], grads)


class _SimSource:
    def __init__(self, cfg: StreamConfig):
        self.stream = GradientStream(cfg)
        self.bounds = cfg.group_bounds()
        self.size = cfg.minibatch_size_units
        self.params = [np.zeros(hi - lo) for lo, hi in self.bounds]

    @property
    def n_groups(self) -> int:
        return len(self.bounds)

    def minibatch(self, t: int):
        g = self.stream.next(t)
        return None, [g[lo:hi] for lo, hi in self.bounds], self.size

    def get_params(self):
        return self.params

    def set_params(self, params):
        self.params = params


class _ToySource:
    def __init__(self, cfg: ToyConfig, seed: int):
        _, self.model, self.data = make_teacher_student(
            seed, cfg.dims, cfg.label_noise_sigma, cfg.teacher_gain
        )
        self.size = cfg.minibatch_size

    @property
    def n_groups(self) -> int:
        return self.model.n_groups

    def minibatch(self, t: int):
        batch = self.data.next_batch(self.size)
        loss, grads = loss_and_grads(self.model, batch)
        return loss, grads, batch.size_units

    def get_params(self):
        return self.model.params()

    def set_params(self, params):
        self.model.set_params(params)


def make_source(cfg: TrainConfig):
    if cfg.source == "sim":
        return _SimSource(cfg.sim)
    return _ToySource(cfg.toy, cfg.seed)


def train(cfg: TrainConfig, source=None) -> RunReport:
    source = source or make_source(cfg)
    n_groups = source.n_groups
    stats = [GroupStats(i, cfg.sampler.window_len) for i in range(n_groups)]
    sampler_rng = np.random.Generator(np.random.PCG64(cfg.sampler.rng_seed))
    opt = SGD(cfg.optimizer.learning_rate, cfg.optimizer.momentum)
    report = RunReport(group_counts=[0] * n_groups)
    budget = cfg.data_budget

    for t in range(cfg.total_steps):
        gid = sample_group(stats, cfg.sampler, sampler_rng) if cfg.monitor == "group" else None
        rnd = begin_round()
        acc = None
        prev = None
        losses, sizes = [], []
        while True:
            if budget is not None and budget <= 0:
                log.warning("data exhausted at step %d; dropping the open round", t)
                report.truncated = True
                return report
            loss, grads, size = source.minibatch(t)
            if budget is not None:
                budget -= 1
            grads = [GradVector(g) for g in grads]
            acc = grads if acc is None else [accumulate(a, g) for a, g in zip(acc, grads)]
            if loss is not None:
                losses.append(loss)
            sizes.append(size)

            cur = acc[gid] if gid is not None else GradVector(np.concatenate([a.values for a in acc]))
            angle = None
            if prev is not None:
                try:
                    angle = angle_deg(prev, cur)
                except DegenerateGradient:
                    angle = None
            prev = cur
            if observe_minibatch(rnd, angle, cfg.controller, size).is_step:
                break

        record = finalize_round(rnd)
        if gid is not None:
            report.group_counts[gid] += 1
            if record.angles:
                record_round(stats[gid], record.angles, cfg.sampler.mode)
        new_params = apply_update(
            source.get_params(), [a.values for a in acc], record.k, sizes, opt, cfg.update
        )
        source.set_params(new_params)

        report.batch_records.append(record)
        report.a_min_trace.append(record.a_min)
        report.group_trace.append((t, gid, [s.mean_delta for s in stats]))
        if losses:
            report.loss_curve.append(math.fsum(losses) / len(losses))
        if log.isEnabledFor(logging.DEBUG):
            log.debug("step %d group %s k=%d verdict=%s", t, gid, record.k, record.verdict.value)
    return report


@dataclass
class Summary:
    batch_stats: dict
    hist_edges: list
    hist_counts: list
    amin_windows: list  # (window_start, mean a_min or None)


def histogram(sizes, n_bins: int = 20) -> tuple[list[float], list[int]]:
    """Fixed-width bins spanning exactly [min, max] of the sizes."""
    lo, hi = min(sizes), max(sizes)
    if lo == hi:
        return [float(lo), float(hi)], [len(sizes)]
    bins = max(1, min(n_bins, len(set(sizes))))
    counts, edges = np.histogram(sizes, bins=bins, range=(lo, hi))
    return [float(e) for e in edges], [int(c) for c in counts]


def windowed_means(trace, window: int) -> list[tuple[int, float | None]]:
    """Means over consecutive windows; None entries are ignored, a short tail window is kept."""
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    out = []
    for start in range(0, len(trace), window):
        vals = [v for v in trace[start:start + window] if v is not None]
        out.append((start, math.fsum(vals) / len(vals) if vals else None))
    return out


def summarize(report: RunReport, window: int, n_bins: int = 20) -> Summary:
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    if not report.batch_records:
        raise ValueError("empty report")
    edges, counts = histogram(report.sizes, n_bins)
    return Summary(
        batch_stats=report.batch_stats,
        hist_edges=edges,
        hist_counts=counts,
        amin_windows=windowed_means(report.a_min_trace, window),
    )


def quarter_means(trace) -> tuple[float, float]:
    """Mean a_min over the first and the last quarter of the run."""
    q = max(1, len(trace) // 4)
    first = [v for v in trace[:q] if v is not None]
    last = [v for v in trace[-q:] if v is not None]
    return math.fsum(first) / len(first), math.fsum(last) / len(last)
