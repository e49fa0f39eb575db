import numpy as np
import pytest
from hypothesis import given, strategies as st

from bezdistill.errors import DomainError, ShapeError, UsageError, ConfigError
from bezdistill.mathcore import (AdamState, MlpParams, MlpSpec, adam_step, init_params, loss_and_grad,
                                 mlp_forward, mlp_input_jacobian, zero_params)

from oracles import fd_loss_grad, linear_field_params, max_rel_err, random_mlp_instance


def test_zero_network_outputs_zero(rng):
    p = zero_params(MlpSpec(2))
    assert np.array_equal(mlp_forward(p, rng.standard_normal((5, 2)), rng.random(5)), np.zeros((5, 2)))


def test_identity_linear_layer():
    spec = MlpSpec(2, hidden_sizes=())
    p = linear_field_params(spec, np.eye(2))
    for t in (0.0, 0.3, 1.0):
        assert np.array_equal(mlp_forward(p, np.array([3.0, -1.0]), t), [3.0, -1.0])


@pytest.mark.parametrize("embedding", ["append_scalar", "sinusoidal"])
def test_input_jacobian_matches_central_differences(rng, embedding):
    spec = MlpSpec(3, (16, 16), "tanh", embedding, 3)
    p = init_params(spec, rng)
    x, t, h = rng.standard_normal(3), 0.37, 1e-5
    jac = mlp_input_jacobian(p, x, t)
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        col = (mlp_forward(p, x + e, t) - mlp_forward(p, x - e, t)) / (2 * h)
        assert max_rel_err(jac[:, j], col) <= 1e-6


def test_forward_errors():
    p = zero_params(MlpSpec(2))
    with pytest.raises(ShapeError):
        mlp_forward(p, np.zeros(3), 0.0)
    with pytest.raises(DomainError):
        mlp_forward(p, np.array([np.nan, 0.0]), 0.0)
    with pytest.raises(DomainError):
        mlp_forward(p, np.zeros(2), 1.5)


def test_spec_validation():
    with pytest.raises(ConfigError):
        MlpSpec(2, activation="gelu")
    with pytest.raises(ConfigError):
        MlpSpec(2, time_embedding="sinusoidal", frequencies=0)
    assert MlpSpec(2).input_dim == 3
    assert MlpSpec(2, time_embedding="sinusoidal", frequencies=4).input_dim == 10


def test_loss_of_zero_network_is_target_norm():
    g = np.array([1.5, -2.0])
    loss, _ = loss_and_grad(zero_params(MlpSpec(2)), np.zeros((1, 2)), np.zeros(1), g[None])
    assert loss == pytest.approx(g @ g, rel=0, abs=0)


def test_oracle_fit_has_zero_loss_and_gradient(rng):
    # v(x, t) = 2x + t * (1, -1) + (0.5, 0) reproduced exactly by a linear net
    spec = MlpSpec(2, hidden_sizes=())
    p = linear_field_params(spec, 2 * np.eye(2), np.array([1.0, -1.0]), [0.5, 0.0])
    x, t = rng.standard_normal((8, 2)), rng.random(8)
    target = 2 * x + t[:, None] * np.array([1.0, -1.0]) + np.array([0.5, 0.0])
    loss, grad = loss_and_grad(p, x, t, target)
    assert loss == pytest.approx(0.0, abs=1e-28)
    assert np.allclose(grad.flatten(), 0.0, atol=1e-14)


def test_loss_and_grad_rejects_empty_batch():
    with pytest.raises(UsageError):
        loss_and_grad(zero_params(MlpSpec(2)), np.zeros((0, 2)), np.zeros(0), np.zeros((0, 2)))


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(1)
    for _ in range(20):
        params, x, t, target = random_mlp_instance(rng)
        _, grad = loss_and_grad(params, x, t, target)
        assert max_rel_err(grad.flatten(), fd_loss_grad(params, x, t, target)) <= 1e-4


def test_forward_is_deterministic(rng):
    p = init_params(MlpSpec(2), 3)
    x, t = rng.standard_normal((64, 2)), rng.random(64)
    assert np.array_equal(mlp_forward(p, x, t), mlp_forward(p, x.copy(), t.copy()))


@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.floats(0, 1))
def test_forward_finite_on_finite_input(a, b, t):
    p = init_params(MlpSpec(2), 0)
    assert np.isfinite(mlp_forward(p, np.array([a, b]), t)).all()


def test_flat_roundtrip(rng):
    p = init_params(MlpSpec(3, (5, 7)), rng)
    q = MlpParams.from_flat(p.spec, p.flatten())
    assert all(np.array_equal(a, b) for a, b in zip(p.weights + p.biases, q.weights + q.biases))
    with pytest.raises(ShapeError):
        MlpParams.from_flat(p.spec, p.flatten()[:-1])


def _scalar_params(theta: float) -> MlpParams:
    # a one-parameter stand-in: a 1->1 linear net with x-weight theta and the
    # time weight and bias pinned at zero (their gradients are fed as zero)
    spec = MlpSpec(1, hidden_sizes=())
    return MlpParams(spec, (np.array([[theta], [0.0]]),), (np.zeros(1),))


def _scalar_grad(g: float) -> MlpParams:
    spec = MlpSpec(1, hidden_sizes=())
    return MlpParams(spec, (np.array([[g], [0.0]]),), (np.zeros(1),))


def test_adam_zero_gradient_fresh_state():
    p = init_params(MlpSpec(2, (4,)), 0)
    state = AdamState.fresh(p)
    new, state = adam_step(p, p.zeros_like(), state)
    assert state.step == 1
    assert np.array_equal(new.flatten(), p.flatten())


@given(st.floats(-100, 100).filter(lambda g: abs(g) > 1e-3), st.floats(1e-4, 1.0))
def test_adam_first_step_moves_by_lr(g, lr):
    p, s = adam_step(_scalar_params(1.0), _scalar_grad(g), AdamState.fresh(_scalar_params(1.0), lr=lr))
    assert p.weights[0][0, 0] == pytest.approx(1.0 - lr * np.sign(g), abs=lr * 1e-6)


def test_adam_two_steps_match_hand_recursion():
    lr, b1, b2, eps, g = 0.1, 0.9, 0.999, 1e-8, 1.0
    # hand-unrolled scalar Adam
    theta, m, v = 0.5, 0.0, 0.0
    for k in (1, 2):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        theta -= lr * (m / (1 - b1 ** k)) / (np.sqrt(v / (1 - b2 ** k)) + eps)
    p = _scalar_params(0.5)
    state = AdamState.fresh(p, lr, b1, b2, eps)
    for _ in range(2):
        p, state = adam_step(p, _scalar_grad(g), state)
    assert state.step == 2
    assert p.weights[0][0, 0] == pytest.approx(theta, rel=1e-15)
    assert theta == pytest.approx(0.5 - 0.2, abs=1e-7)


@given(st.integers(0, 50), st.floats(0, 10))
def test_adam_zero_gradient_identity_without_momentum(step, second_moment):
    p = init_params(MlpSpec(2, (3,)), 1)
    state = AdamState(p.zeros_like(), p.map(lambda a: np.full_like(a, second_moment)), step)
    new, out = adam_step(p, p.zeros_like(), state)
    assert out.step == step + 1
    assert np.array_equal(new.flatten(), p.flatten())


def test_adam_shape_mismatch():
    p = init_params(MlpSpec(2, (3,)), 1)
    q = init_params(MlpSpec(2, (4,)), 1)
    with pytest.raises(ShapeError):
        adam_step(p, q, AdamState.fresh(p))
