import numpy as np
import pytest

from bezdistill.errors import DomainError, IntegrationDiverged, ConfigError
from bezdistill.field import SolverSpec, VelocityField, integrate, one_step_map, velocity
from bezdistill.csvio import read_csv
from bezdistill.mathcore import MlpParams, MlpSpec, init_params, mlp_forward, zero_params

from oracles import linear_field_params

LIN = MlpSpec(1, hidden_sizes=())


def constant_field(c) -> VelocityField:
    c = np.asarray(c, dtype=np.float64)
    spec = MlpSpec(len(c), hidden_sizes=())
    return VelocityField(spec, linear_field_params(spec, np.zeros((len(c), len(c))), bias=c), "const")


def exp_field() -> VelocityField:
    return VelocityField(LIN, linear_field_params(LIN, np.eye(1)), "v=x")


def test_zero_field_velocity(rng):
    f = VelocityField(MlpSpec(2), zero_params(MlpSpec(2)))
    assert np.array_equal(velocity(f, rng.standard_normal((4, 2)), 0.3), np.zeros((4, 2)))


def test_velocity_is_mlp_forward(rng):
    f = VelocityField(MlpSpec(2), init_params(MlpSpec(2), 1))
    x, t = rng.standard_normal((9, 2)), rng.random(9)
    assert np.array_equal(velocity(f, x, t), mlp_forward(f.params, x, t))


def test_every_weight_matters(rng):
    spec = MlpSpec(2, (8, 8))
    f = VelocityField(spec, init_params(spec, 2))
    probes_x, probes_t = rng.standard_normal((100, 2)), rng.random(100)
    base = velocity(f, probes_x, probes_t)
    flat = f.params.flatten()
    for i in range(flat.size):
        bumped = flat.copy()
        bumped[i] += 0.1
        g = VelocityField(spec, MlpParams.from_flat(spec, bumped))
        assert not np.array_equal(velocity(g, probes_x, probes_t), base), i


@pytest.mark.parametrize("steps", [1, 7, 50])
def test_constant_field_exact_under_euler(rng, steps):
    x0 = rng.standard_normal((5, 2))
    c = np.array([0.5, -2.0])
    end = integrate(constant_field(c), x0, SolverSpec("euler", steps)).endpoint
    np.testing.assert_allclose(end, x0 + c, rtol=0, atol=1e-14)


def test_exponential_rk4():
    end = integrate(exp_field(), np.array([[1.0]]), SolverSpec("rk4", 100)).endpoint
    assert abs(end[0, 0] - np.e) <= 1e-6


def test_zero_field_trajectory_constant(rng):
    x0 = rng.standard_normal((3, 2))
    traj = integrate(VelocityField(MlpSpec(2), zero_params(MlpSpec(2))), x0, SolverSpec("midpoint", 10))
    assert all(np.array_equal(s, x0) for s in traj.states)


@pytest.mark.parametrize("steps", [1, 4, 33])
def test_grid_is_uniform_with_endpoints(steps):
    traj = integrate(exp_field(), np.ones((1, 1)), SolverSpec("rk4", steps))
    assert len(traj.times) == steps + 1 and traj.states.shape == (steps + 1, 1, 1)
    assert traj.times[0] == 0.0 and traj.times[-1] == 1.0
    np.testing.assert_allclose(np.diff(traj.times), 1.0 / steps, rtol=1e-12)


def test_one_step_map(rng):
    x0 = rng.standard_normal((6, 2))
    zero = VelocityField(MlpSpec(2), zero_params(MlpSpec(2)))
    assert np.array_equal(one_step_map(zero, x0), x0)
    np.testing.assert_allclose(one_step_map(constant_field([1.0, 2.0]), x0), x0 + [1.0, 2.0], atol=1e-15)
    f = VelocityField(MlpSpec(2), init_params(MlpSpec(2), 4))
    assert np.array_equal(one_step_map(f, x0), integrate(f, x0, SolverSpec("euler", 1)).endpoint)


def _order(method: str, ladder) -> float:
    errs = [abs(integrate(exp_field(), np.ones((1, 1)), SolverSpec(method, n)).endpoint[0, 0] - np.e) for n in ladder]
    slopes = np.diff(np.log(errs)) / np.diff(np.log(1.0 / np.asarray(ladder, dtype=float)))
    return float(np.mean(slopes))


@pytest.mark.parametrize("method,order,ladder", [
    ("euler", 1, [40, 80, 160, 320]), ("midpoint", 2, [10, 20, 40, 80]), ("rk4", 4, [4, 8, 16, 32])])
def test_convergence_order(method, order, ladder):
    assert abs(_order(method, ladder) - order) <= 0.15 * order


def test_divergence_names_step():
    blowup = lambda x, t: np.where(t[:, None] > 0.45, np.inf, x)  # noqa: E731
    with pytest.raises(IntegrationDiverged) as info:
        integrate(blowup, np.ones((2, 1)), SolverSpec("euler", 10))
    assert info.value.step == 6


def test_solver_validation():
    with pytest.raises(ConfigError):
        SolverSpec("heun")
    with pytest.raises(ConfigError):
        SolverSpec("rk4", 0)
    with pytest.raises(ConfigError):
        SolverSpec("rk4", 10, 0.5, 0.5)
    with pytest.raises(DomainError):
        integrate(exp_field(), np.array([[np.nan]]))


def test_trajectory_csv(tmp_path):
    traj = integrate(constant_field([1.0, 0.0]), np.zeros((2, 2)), SolverSpec("euler", 2))
    traj.to_csv(tmp_path / "t.csv")
    _, header, data = read_csv(tmp_path / "t.csv")
    assert header == ["particle_id", "t", "x0", "x1"]
    assert data.shape == (6, 4)
    np.testing.assert_allclose(data[:3, 1], [0.0, 0.5, 1.0])
    np.testing.assert_allclose(data[:3, 2], [0.0, 0.5, 1.0])
