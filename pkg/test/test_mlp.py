"""
Multilayer perceptron: initialisation, forward pass, gradients and training.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from src.exceptions import ConfigError, DimensionError, DivergenceError, PreconditionError
from src.models import MlpConfig, MlpModel, forward, init_mlp, loss_and_gradients, train_mlp


def test_init_is_deterministic_per_seed():
    cfg = MlpConfig(hidden_layers=(4,), seed=7)
    first, second = init_mlp(cfg), init_mlp(cfg)
    for a, b in zip(first.parameters(), second.parameters()):
        np.testing.assert_array_equal(a, b)
    other = init_mlp(MlpConfig(hidden_layers=(4,), seed=8))
    assert not np.array_equal(first.weights[0], other.weights[0])


def test_init_shapes_and_bounds():
    model = init_mlp(MlpConfig(hidden_layers=(4,), seed=7))
    assert model.layer_shapes == [(11, 4), (4, 1)]
    assert all(np.all(b == 0) for b in model.biases)

    wide = init_mlp(MlpConfig(hidden_layers=(16,), n_inputs=100, seed=1))
    assert np.abs(wide.weights[0]).max() <= math.sqrt(3) / 10


def test_invalid_configs():
    with pytest.raises(ConfigError):
        MlpConfig(hidden_layers=())
    with pytest.raises(ConfigError):
        MlpConfig(hidden_layers=(4, 0))
    with pytest.raises(ConfigError):
        MlpConfig(learning_rate=0)


def _manual(weights, biases, activation="relu", n_inputs=2):
    cfg = MlpConfig(hidden_layers=(len(biases[0]),), activation=activation, n_inputs=n_inputs)
    return MlpModel([np.array(w, dtype=float) for w in weights], [np.array(b, dtype=float) for b in biases], cfg)


def test_zero_weights_return_output_bias():
    model = _manual([np.zeros((2, 3)), np.zeros((3, 1))], [np.zeros(3), [5.0]])
    prediction, _ = forward(model, np.array([1.0, -2.0]))
    assert prediction == 5.0


def test_dead_relu_units_return_output_bias():
    model = _manual([np.zeros((2, 2)), np.ones((2, 1))], [[-1.0, -1.0], [0.25]])
    prediction, _ = forward(model, np.array([3.0, 4.0]))
    assert prediction == 0.25


def test_forward_by_hand_with_tanh():
    model = _manual([np.eye(2), [[1.0], [1.0]]], [[0.0, 0.0], [0.5]], activation="tanh")
    prediction, cache = forward(model, np.array([0.5, -0.25]))
    assert prediction == pytest.approx(math.tanh(0.5) + math.tanh(-0.25) + 0.5)
    assert len(cache) == 3


def test_forward_batch_returns_vector():
    model = init_mlp(MlpConfig(hidden_layers=(3,), n_inputs=2))
    out, _ = forward(model, np.ones((4, 2)))
    assert out.shape == (4,)
    with pytest.raises(DimensionError):
        forward(model, np.ones(3))


@pytest.mark.parametrize("activation", ["relu", "tanh", "sigmoid"])
def test_gradients_match_finite_differences(activation, rng):
    cfg = MlpConfig(hidden_layers=(3, 2), activation=activation, n_inputs=2, seed=3)
    model = init_mlp(cfg)
    for b in model.biases:
        b += 0.1
    X = rng.normal(size=(5, 2))
    y = rng.normal(size=5)
    _, grad_w, grad_b = loss_and_gradients(model, X, y)

    h = 1e-5
    for param, grad in zip(model.parameters(), [*grad_w, *grad_b]):
        for index in np.ndindex(param.shape):
            saved = param[index]
            param[index] = saved + h
            up, _, _ = loss_and_gradients(model, X, y)
            param[index] = saved - h
            down, _, _ = loss_and_gradients(model, X, y)
            param[index] = saved
            numeric = (up - down) / (2 * h)
            assert abs(numeric - grad[index]) / max(abs(numeric) + abs(grad[index]), 1e-8) < 1e-4


def _line(n=64):
    X = np.linspace(-1, 1, n)[:, None]
    return X, 0.5 * X[:, 0]


def test_training_fits_a_line():
    X, y = _line()
    cfg = MlpConfig(hidden_layers=(8,), activation="tanh", epochs=500, batch_size=16, n_inputs=1, seed=0)
    model = train_mlp(cfg, X, y)
    assert len(model.loss_curve) == 501
    assert model.loss_curve[-1] < 1e-2
    assert model.loss_curve[-1] < model.loss_curve[0]


def test_training_is_deterministic():
    X, y = _line(32)
    cfg = MlpConfig(hidden_layers=(4,), epochs=20, batch_size=8, n_inputs=1, seed=11)
    first, second = train_mlp(cfg, X, y), train_mlp(cfg, X, y)
    for a, b in zip(first.parameters(), second.parameters()):
        np.testing.assert_array_equal(a, b)
    assert first.loss_curve == second.loss_curve


def test_huge_learning_rate_diverges():
    X, y = _line(32)
    cfg = MlpConfig(hidden_layers=(4,), learning_rate=1e3, epochs=200, batch_size=8, n_inputs=1)
    with pytest.raises(DivergenceError) as info:
        train_mlp(cfg, X, y)
    assert info.value.epoch >= 1


def test_too_few_rows_for_a_batch():
    X, y = _line(8)
    with pytest.raises(PreconditionError):
        train_mlp(MlpConfig(hidden_layers=(2,), batch_size=16, n_inputs=1), X, y)


def test_validation_restores_best_epoch(rng):
    X, y = _line(48)
    Xv = rng.uniform(-1, 1, size=(16, 1))
    yv = 0.5 * Xv[:, 0]
    cfg = MlpConfig(hidden_layers=(4,), activation="tanh", epochs=30, batch_size=8, n_inputs=1, seed=2)
    model = train_mlp(cfg, X, y, valid=(Xv, yv))
    assert len(model.valid_curve) == 31
    prediction, _ = forward(model, Xv)
    assert float(np.mean((prediction - yv) ** 2)) == pytest.approx(min(model.valid_curve))


def test_payload_roundtrip_predicts_identically(rng):
    X, y = _line(32)
    model = train_mlp(MlpConfig(hidden_layers=(4, 3), epochs=5, batch_size=8, n_inputs=1), X, y)
    restored = MlpModel.from_payload(model.to_payload())
    np.testing.assert_array_equal(restored.predict(X), model.predict(X))
