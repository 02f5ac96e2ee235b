import numpy as np
import pytest

from gradgate.toy_model import (
    DEFAULT_DIMS,
    MLP,
    TaskBatch,
    TeacherData,
    loss_and_grads,
    make_teacher_student,
)


def loss_only(model, batch):
    return loss_and_grads(model, batch)[0]


def finite_difference_grads(model, batch, h=1e-5):
    """Central differences, one coordinate at a time, per group."""
    out = []
    for gi in range(model.n_groups):
        theta = model.get_group(gi)
        g = np.zeros_like(theta)
        for j in range(theta.size):
            m = model.copy()
            tp = theta.copy()
            tp[j] += h
            m.set_group(gi, tp)
            lp = loss_only(m, batch)
            tp[j] -= 2 * h
            m.set_group(gi, tp)
            lm = loss_only(m, batch)
            g[j] = (lp - lm) / (2 * h)
        out.append(g)
    return out


def assert_grads_close(analytic, numeric, rel=1e-4):
    for a, n in zip(analytic, numeric):
        bad = np.abs(a - n) > rel * np.maximum(np.abs(a), np.abs(n)) + 1e-9
        assert not bad.any(), (a[bad], n[bad])


def random_batch(rng, n, d_in, d_out):
    return TaskBatch(rng.standard_normal((n, d_in)), rng.standard_normal((n, d_out)))


class TestShapes:
    def test_dims(self):
        m = MLP.init(DEFAULT_DIMS, np.random.default_rng(0))
        assert m.layer_dims == list(DEFAULT_DIMS)
        assert m.n_groups == 4
        assert m.group_sizes() == [16 * 32 + 32, 32 * 32 + 32, 32 * 16 + 16, 16 + 1]

    def test_incompatible_layers(self):
        with pytest.raises(ValueError):
            MLP([np.zeros((4, 3)), np.zeros((2, 5))], [np.zeros(4), np.zeros(2)])

    def test_flatten_order(self):
        w = np.arange(6.0).reshape(2, 3)
        m = MLP([w], [np.array([10.0, 11.0])])
        np.testing.assert_array_equal(m.get_group(0), [0, 1, 2, 3, 4, 5, 10, 11])
        m.set_group(0, m.get_group(0) * 2)
        np.testing.assert_array_equal(m.weights[0], w * 2)

    def test_batch_mismatch(self):
        m = MLP.init((3, 2), np.random.default_rng(0))
        with pytest.raises(ValueError):
            loss_and_grads(m, TaskBatch(np.zeros((4, 5)), np.zeros((4, 2))))
        with pytest.raises(ValueError):
            TaskBatch(np.zeros((4, 3)), np.zeros((3, 2)))


def test_zero_model_zero_targets():
    m = MLP([np.zeros((2, 3))], [np.zeros(2)])
    loss, grads = loss_and_grads(m, TaskBatch(np.ones((5, 3)), np.zeros((5, 2))))
    assert loss == 0.0
    assert all(not g.any() for g in grads)


def test_finite_differences_small_model():
    rng = np.random.default_rng(1)
    m = MLP.init((3, 4, 2), rng)
    batch = random_batch(rng, 8, 3, 2)
    _, grads = loss_and_grads(m, batch)
    assert_grads_close(grads, finite_difference_grads(m, batch))


def test_doubling_targets_doubles_bias_gradient():
    m = MLP([np.zeros((2, 3))], [np.zeros(2)])
    rng = np.random.default_rng(2)
    x, y = rng.standard_normal((6, 3)), rng.standard_normal((6, 2))
    _, g1 = loss_and_grads(m, TaskBatch(x, y))
    _, g2 = loss_and_grads(m, TaskBatch(x, 2 * y))
    np.testing.assert_allclose(g2[0][-2:], 2 * g1[0][-2:], rtol=1e-14)


def test_concatenated_batch_is_weighted_mean():
    rng = np.random.default_rng(3)
    m = MLP.init(DEFAULT_DIMS, rng)
    parts = [random_batch(rng, n, 16, 1) for n in (3, 5, 8)]
    big_loss, big_grads = loss_and_grads(m, TaskBatch.concat(parts))
    total = sum(p.size_units for p in parts)
    results = [loss_and_grads(m, p) for p in parts]
    loss = sum(p.size_units * r[0] for p, r in zip(parts, results)) / total
    assert big_loss == pytest.approx(loss, abs=1e-10)
    for gi in range(m.n_groups):
        mean = sum(p.size_units * r[1][gi] for p, r in zip(parts, results)) / total
        np.testing.assert_allclose(big_grads[gi], mean, atol=1e-10)


def test_deterministic():
    a = make_teacher_student(5)
    b = make_teacher_student(5)
    for wa, wb in zip(a[0].weights, b[0].weights):
        assert np.array_equal(wa, wb)
    ba, bb = a[2].next_batch(8), b[2].next_batch(8)
    assert np.array_equal(ba.y, bb.y)
    la, ga = loss_and_grads(a[1], ba)
    lb, gb = loss_and_grads(b[1], bb)
    assert la == lb and all(np.array_equal(x, y) for x, y in zip(ga, gb))


def test_student_differs_from_teacher():
    teacher, student, _ = make_teacher_student(0)
    assert not np.array_equal(teacher.weights[0], student.weights[0])


def test_student_equal_to_teacher_is_optimal():
    teacher, _, _ = make_teacher_student(0, label_noise_sigma=0.0)
    data = TeacherData(teacher, 0.0, seed=9)
    loss, grads = loss_and_grads(teacher.copy(), data.next_batch(32))
    assert loss == 0.0
    assert all(not g.any() for g in grads)


def test_label_noise_variance():
    sigma = 0.7
    teacher, _, data = make_teacher_student(4, label_noise_sigma=sigma)
    batch = data.next_batch(200_000)
    clean = teacher(batch.x)
    var_y = batch.y.var(axis=0)
    assert (var_y >= sigma**2).all()
    np.testing.assert_allclose(var_y, clean.var(axis=0) + sigma**2, rtol=0.02)
    np.testing.assert_allclose((batch.y - clean).std(), sigma, rtol=0.01)


def test_teacher_gain_scales_output_layer():
    t1, _, _ = make_teacher_student(0, teacher_gain=1.0)
    t5, _, _ = make_teacher_student(0, teacher_gain=5.0)
    np.testing.assert_allclose(t5.weights[-1], 5 * t1.weights[-1])
    np.testing.assert_array_equal(t5.weights[0], t1.weights[0])
