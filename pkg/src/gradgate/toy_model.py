"""Small tanh MLP with exact backprop on a teacher-student regression task.

Every layer is one parameter group.  A group's gradient is flattened as the
weight matrix (shape ``out x in``) in row-major order followed by the bias.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_DIMS = (16, 32, 32, 16, 1)


@dataclass
class TaskBatch:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.x = np.atleast_2d(np.asarray(self.x, dtype=np.float64))
        self.y = np.atleast_2d(np.asarray(self.y, dtype=np.float64))
        if self.x.shape[0] < 1 or self.x.shape[0] != self.y.shape[0]:
            raise ValueError(f"bad batch shapes {self.x.shape} / {self.y.shape}")
        if not (np.isfinite(self.x).all() and np.isfinite(self.y).all()):
            raise ValueError("batch entries must be finite")

    @property
    def size_units(self) -> int:
        return self.x.shape[0]

    @staticmethod
    def concat(batches) -> "TaskBatch":
        return TaskBatch(np.concatenate([b.x for b in batches]), np.concatenate([b.y for b in batches]))


class MLP:
    def __init__(self, weights, biases):
        if len(weights) != len(biases) or not weights:
            raise ValueError("need one bias per weight matrix")
        for i, (w, b) in enumerate(zip(weights, biases)):
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise ValueError(f"layer {i}: weight {w.shape} and bias {b.shape} do not match")
            if i and w.shape[1] != weights[i - 1].shape[0]:
                raise ValueError(f"layer {i}: input dim {w.shape[1]} != previous output {weights[i - 1].shape[0]}")
        self.weights = [np.array(w, dtype=np.float64) for w in weights]
        self.biases = [np.array(b, dtype=np.float64) for b in biases]

    @classmethod
    def init(cls, dims, rng: np.random.Generator) -> "MLP":
        if len(dims) < 2 or min(dims) < 1:
            raise ValueError(f"invalid layer dims {dims}")
        weights, biases = [], []
        for d_in, d_out in zip(dims[:-1], dims[1:]):
            weights.append(rng.standard_normal((d_out, d_in)) / np.sqrt(d_in))
            biases.append(0.1 * rng.standard_normal(d_out))
        return cls(weights, biases)

    @property
    def layer_dims(self) -> list[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    @property
    def n_groups(self) -> int:
        return len(self.weights)

    def group_sizes(self) -> list[int]:
        return [w.size + b.size for w, b in zip(self.weights, self.biases)]

    def copy(self) -> "MLP":
        return MLP([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def get_group(self, i: int) -> np.ndarray:
        return np.concatenate((self.weights[i].ravel(), self.biases[i]))

    def set_group(self, i: int, flat: np.ndarray) -> None:
        w = self.weights[i]
        self.weights[i] = np.asarray(flat[: w.size], dtype=np.float64).reshape(w.shape).copy()
        self.biases[i] = np.asarray(flat[w.size:], dtype=np.float64).copy()

    def params(self) -> list[np.ndarray]:
        return [self.get_group(i) for i in range(self.n_groups)]

    def set_params(self, groups) -> None:
        for i, g in enumerate(groups):
            self.set_group(i, g)

    def forward(self, x: np.ndarray) -> np.ndarray:
        a = x
        last = self.n_groups - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w.T + b
            a = z if i == last else np.tanh(z)
        return a

    __call__ = forward


def loss_and_grads(model: MLP, batch: TaskBatch) -> tuple[float, list[np.ndarray]]:
    """Mean squared error over all outputs of the batch and per-layer gradients."""
    x, y = batch.x, batch.y
    if x.shape[1] != model.weights[0].shape[1] or y.shape[1] != model.weights[-1].shape[0]:
        raise ValueError(
            f"batch dims ({x.shape[1]}, {y.shape[1]}) do not match model "
            f"({model.weights[0].shape[1]}, {model.weights[-1].shape[0]})"
        )
    acts = [x]
    last = model.n_groups - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = acts[-1] @ w.T + b
        acts.append(z if i == last else np.tanh(z))

    err = acts[-1] - y
    loss = float(np.mean(err * err))
    delta = (2.0 / err.size) * err
    grads = [None] * model.n_groups
    for i in range(last, -1, -1):
        gw = delta.T @ acts[i]
        gb = delta.sum(axis=0)
        grads[i] = np.concatenate((gw.ravel(), gb))
        if i:
            delta = (delta @ model.weights[i]) * (1.0 - acts[i] ** 2)
    return loss, grads


class TeacherData:
    """Endless stream of batches ``y = teacher(x) + noise`` with ``x ~ N(0, I)``."""

    def __init__(self, teacher: MLP, label_noise_sigma: float, seed: int):
        if label_noise_sigma < 0:
            raise ValueError("label_noise_sigma must be >= 0")
        self.teacher = teacher
        self.label_noise_sigma = label_noise_sigma
        self.rng = np.random.Generator(np.random.PCG64(seed))

    def next_batch(self, n: int) -> TaskBatch:
        x = self.rng.standard_normal((n, self.teacher.layer_dims[0]))
        y = self.teacher(x)
        if self.label_noise_sigma > 0:
            y = y + self.label_noise_sigma * self.rng.standard_normal(y.shape)
        return TaskBatch(x, y)


def make_teacher_student(
    seed: int,
    dims=DEFAULT_DIMS,
    label_noise_sigma: float = 0.1,
    teacher_gain: float = 1.0,
):
    """Teacher from ``seed``, student from ``seed + 1``, data from ``seed + 2``.

    ``teacher_gain`` scales the teacher's output layer; a larger gain gives a
    longer, better-conditioned descent phase before the label noise dominates.
    """
    dims = tuple(dims)
    teacher = MLP.init(dims, np.random.Generator(np.random.PCG64(seed)))
    teacher.weights[-1] *= teacher_gain
    teacher.biases[-1] *= teacher_gain
    student = MLP.init(dims, np.random.Generator(np.random.PCG64(seed + 1)))
    return teacher, student, TeacherData(teacher, label_noise_sigma, seed + 2)
