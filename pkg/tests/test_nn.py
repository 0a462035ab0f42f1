import json
import math

import numpy as np
import pytest

from cskg.errors import CheckpointError, TrainingError
from cskg.nn import (DenseLayer, Mlp, TrainState, assign, flatten, identity_mlp, init_mlp, load_checkpoint,
                     make_mlp, mlp_backward, mlp_forward, save_checkpoint, sgd_step, softmax,
                     softmax_cross_entropy, step_decay)

from conftest import finite_difference, max_relative_error


def test_forward_hand_example():
    m = Mlp([DenseLayer([[1.0, -1.0], [2.0, 0.0]], [0.0, -5.0], "relu"), DenseLayer([[1.0, 1.0]], [0.5])])
    # hidden = relu([1-2, 2-5]) = [0, 0]; out = 0.5
    assert mlp_forward(m, [1.0, 2.0]).tolist() == [0.5]
    # hidden = relu([3, 1]) = [3, 1]; out = 4.5
    assert mlp_forward(m, [3.0, 0.0]).tolist() == [4.5]


def test_default_shape_and_init_range(rng):
    m = make_mlp(4, 3, rng)
    assert m.describe() == [[4, 4, "relu"], [4, 3, "identity"]]
    assert all(np.all(np.abs(p) <= 0.5) for p in m.parameters())
    assert m.num_parameters == 4 * 4 + 4 + 4 * 3 + 3


def test_bad_input_shapes(rng):
    m = make_mlp(3, 2, rng)
    with pytest.raises(ValueError):
        m(np.zeros(4))
    with pytest.raises(ValueError):
        mlp_backward(m, np.zeros(3), np.zeros(3))
    with pytest.raises(ValueError):
        Mlp([DenseLayer(np.zeros((2, 3)), np.zeros(2)), DenseLayer(np.zeros((1, 3)), np.zeros(1))])


@pytest.mark.parametrize("batch", [False, True])
def test_backward_matches_finite_differences(rng, batch):
    for _ in range(10):
        m = init_mlp([5, 6, 4, 3], rng)
        x = rng.normal(size=(7, 5) if batch else 5)
        up = rng.normal(size=(7, 3) if batch else 3)
        params = m.parameters()
        theta = flatten(params)

        def f(v):
            assign(params, v)
            return float(np.sum(up * m(x)))

        assign(params, theta)
        grads, dx = mlp_backward(m, x, up)
        num = finite_difference(f, theta.copy())
        assign(params, theta)
        assert max_relative_error(flatten(grads), num) < 1e-4
        num_x = finite_difference(lambda v: float(np.sum(up * m(v.reshape(x.shape)))), x.ravel().copy())
        assert max_relative_error(dx.ravel(), num_x) < 1e-4


def test_identity_mlp():
    x = np.arange(4.0)
    np.testing.assert_array_equal(identity_mlp(4)(x), x)


def test_cross_entropy_examples():
    loss, grad = softmax_cross_entropy([0.0, 0.0], 0)
    assert loss == pytest.approx(math.log(2))
    np.testing.assert_allclose(grad, [-0.5, 0.5])
    loss, _ = softmax_cross_entropy([1000.0, 0.0, -1000.0], 0)
    assert loss == pytest.approx(0.0, abs=1e-12)
    loss, _ = softmax_cross_entropy([1000.0, 0.0], 1)
    assert loss == pytest.approx(1000.0)
    with pytest.raises(ValueError):
        softmax_cross_entropy([0.0, 1.0], 2)


def test_cross_entropy_gradient_and_batch(rng):
    z = rng.normal(size=5)
    _, g = softmax_cross_entropy(z, 3)
    num = finite_difference(lambda v: softmax_cross_entropy(v, 3)[0], z.copy())
    assert max_relative_error(g, num) < 1e-6
    Z = rng.normal(size=(4, 5))
    labels = np.array([0, 3, 1, 4])
    loss, G = softmax_cross_entropy(Z, labels)
    singles = [softmax_cross_entropy(Z[i], labels[i]) for i in range(4)]
    assert loss == pytest.approx(np.mean([s[0] for s in singles]))
    np.testing.assert_allclose(G, np.stack([s[1] for s in singles]) / 4)
    np.testing.assert_allclose(softmax(Z).sum(axis=1), 1.0)


def test_sgd_reduces_quadratic():
    state = TrainState(np.array([3.0, -4.0]), 0.1)
    for _ in range(100):
        state = sgd_step(state, 2 * state.parameters)
    assert np.linalg.norm(state.parameters) < 1e-8
    assert state.step_count == 100


def test_sgd_rejects_non_finite_and_bad_shapes():
    state = TrainState(np.zeros(2), 0.1, step_count=7)
    with pytest.raises(TrainingError) as exc:
        sgd_step(state, [np.nan, 0.0])
    assert exc.value.step == 7
    with pytest.raises(ValueError):
        sgd_step(state, [1.0])
    with pytest.raises(ValueError):
        TrainState(np.zeros(2), -1.0)


def test_step_decay():
    assert step_decay(0.1, 5, 0, 10) == 0.1
    assert step_decay(0.1, 99, 100, 10) == 0.1
    assert step_decay(0.1, 100, 100, 10) == pytest.approx(0.01)
    assert step_decay(0.1, 250, 100, 10) == pytest.approx(0.001)


def test_flatten_assign_round_trip(rng):
    arrays = [np.zeros((2, 3)), np.zeros(4)]
    v = rng.normal(size=10)
    assign(arrays, v)
    np.testing.assert_array_equal(flatten(arrays), v)
    with pytest.raises(ValueError):
        assign(arrays, np.zeros(9))


def test_checkpoint_round_trip_and_rejection(tmp_path, rng):
    p = tmp_path / "m.json"
    desc = {"mlp": [[3, 3, "relu"], [3, 2, "identity"]]}
    theta = rng.normal(size=20)
    save_checkpoint(p, desc, theta)
    d, loaded = load_checkpoint(p, desc)
    assert d == desc
    np.testing.assert_array_equal(loaded, theta)
    with pytest.raises(CheckpointError):
        load_checkpoint(p, {"mlp": [[3, 4, "relu"]]})
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"format": "other"}))
    with pytest.raises(CheckpointError):
        load_checkpoint(bad)
    bad.write_text("{not json")
    with pytest.raises(CheckpointError):
        load_checkpoint(bad)
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "missing.json")
