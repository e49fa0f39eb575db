"""Velocity fields, fixed-step ODE integration and the one-step map."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Literal, Union

import numpy as np

from .errors import ConfigError, DomainError, IntegrationDiverged
from .mathcore import MlpParams, MlpSpec, mlp_forward

Method = Literal["euler", "midpoint", "rk4"]


@dataclass(frozen=True)
class VelocityField:
    spec: MlpSpec
    params: MlpParams
    label: str = "field"

    def __post_init__(self):
        if self.params.spec != self.spec:
            raise ConfigError("field spec and parameter spec differ")

    @property
    def dim(self) -> int:
        return self.spec.data_dim

    def __call__(self, x, t) -> np.ndarray:
        return mlp_forward(self.params, x, t)


Drift = Union[VelocityField, Callable[[np.ndarray, np.ndarray], np.ndarray]]


def velocity(field: VelocityField, x, t) -> np.ndarray:
    return mlp_forward(field.params, x, t)


@dataclass(frozen=True)
class SolverSpec:
    method: Method = "rk4"
    steps: int = 100
    t_start: float = 0.0
    t_end: float = 1.0

    def __post_init__(self):
        if self.method not in ("euler", "midpoint", "rk4"):
            raise ConfigError(f"unknown solver method {self.method!r}")
        if self.steps < 1:
            raise ConfigError(f"solver needs steps >= 1, got {self.steps}")
        if not 0.0 <= self.t_start < self.t_end <= 1.0:
            raise ConfigError(f"need 0 <= t_start < t_end <= 1, got [{self.t_start}, {self.t_end}]")

    def grid(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_end, self.steps + 1)

    def describe(self) -> str:
        span = "" if (self.t_start, self.t_end) == (0.0, 1.0) else f"@[{self.t_start:g},{self.t_end:g}]"
        return f"{self.method}x{self.steps}{span}"


@dataclass(frozen=True)
class TrajectoryRecord:
    times: np.ndarray  # (steps + 1,)
    states: np.ndarray  # (steps + 1, n, d)
    solver: SolverSpec

    @property
    def endpoint(self) -> np.ndarray:
        return self.states[-1]

    def to_csv(self, path: str | Path, comment: str | None = None) -> None:
        from .csvio import write_csv

        _, n, d = self.states.shape
        rows = (
            (i, float(t), *map(float, self.states[k, i]))
            for i in range(n)
            for k, t in enumerate(self.times)
        )
        write_csv(path, ["particle_id", "t", *(f"x{j}" for j in range(d))], rows, comment)


def _drift(field: Drift, x: np.ndarray, t: float) -> np.ndarray:
    return np.asarray(field(x, np.full(x.shape[0], t)), dtype=np.float64).reshape(x.shape)


def integrate(field: Drift, x0, solver: SolverSpec = SolverSpec()) -> TrajectoryRecord:
    """Fixed-step explicit integration of dx/dt = field(x, t).

    Works on any drift ``f(x, t)`` taking a batch and a vector of times, not
    only on network fields. Aborts with :class:`IntegrationDiverged` at the
    first non-finite state.
    """
    x = np.atleast_2d(np.asarray(x0, dtype=np.float64)).copy()
    if not np.isfinite(x).all():
        raise DomainError("initial batch contains non-finite values")
    times = solver.grid()
    states = np.empty((len(times), *x.shape))
    states[0] = x
    for k in range(solver.steps):
        t0, t1 = times[k], times[k + 1]
        h = t1 - t0
        if solver.method == "euler":
            x = x + h * _drift(field, x, t0)
        elif solver.method == "midpoint":
            k1 = _drift(field, x, t0)
            x = x + h * _drift(field, x + 0.5 * h * k1, t0 + 0.5 * h)
        else:
            tm = t0 + 0.5 * h
            k1 = _drift(field, x, t0)
            k2 = _drift(field, x + 0.5 * h * k1, tm)
            k3 = _drift(field, x + 0.5 * h * k2, tm)
            k4 = _drift(field, x + h * k3, t1)
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.isfinite(x).all():
            raise IntegrationDiverged(k + 1)
        states[k + 1] = x
    return TrajectoryRecord(times, states, solver)


def one_step_map(field: Drift, x0) -> np.ndarray:
    """T(x0) = x0 + v(x0, 0)."""
    x = np.atleast_2d(np.asarray(x0, dtype=np.float64))
    if not np.isfinite(x).all():
        raise DomainError("batch contains non-finite values")
    return x + 1.0 * _drift(field, x, 0.0)
