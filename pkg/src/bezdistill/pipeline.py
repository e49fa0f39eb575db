"""Training objectives, guide points, reflow couplings and the training loop.

Four regression objectives share one loop:

* ``rectified_flow`` -- straight-line interpolation, target ``x1 - x0``.
* ``distill`` -- the same target regressed at ``(x0, 0)`` only.
* ``bezier2`` -- quadratic Bezier path through one guide point.
* ``bezier3`` -- cubic Bezier path through two guide points.

The quadratic target has two scalings. ``exact`` is the true time
derivative of the path, so integrating a perfect fit lands on ``x1``.
``paper`` is half of that: the same expression without the factor 2.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Literal, Sequence, Union

import numpy as np

from .datasets import rng_stream
from .errors import ConfigError, DomainError, TrainingDiverged, UsageError
from .field import SolverSpec, VelocityField, integrate
from .mathcore import AdamState, MlpParams, MlpSpec, adam_step, init_params, loss_and_grad

ObjectiveKind = Literal["rectified_flow", "distill", "bezier2", "bezier3"]
GuideMode = Literal["one_step", "euler_to_tau", "interp_velocity", "integrate_to_tau"]
GUIDE_MODES = ("one_step", "euler_to_tau", "interp_velocity", "integrate_to_tau")
GUIDES_NEEDED = {"rectified_flow": 0, "distill": 0, "bezier2": 1, "bezier3": 2}


@dataclass(frozen=True)
class CouplingPair:
    x0: np.ndarray
    x1: np.ndarray
    provenance: str = "independent"  # or "reflow"
    level: int = 0  # rectification level of the flow that produced x1; 0 = independent
    solver: str | None = None

    def __post_init__(self):
        x0 = np.atleast_2d(np.asarray(self.x0, dtype=np.float64))
        x1 = np.atleast_2d(np.asarray(self.x1, dtype=np.float64))
        if x0.shape != x1.shape:
            raise UsageError(f"coupling sides differ in shape: {x0.shape} vs {x1.shape}")
        if not (np.isfinite(x0).all() and np.isfinite(x1).all()):
            raise DomainError("coupling contains non-finite values")
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "x1", x1)

    @property
    def n(self) -> int:
        return self.x0.shape[0]

    @property
    def dim(self) -> int:
        return self.x0.shape[1]

    def take(self, idx: np.ndarray) -> "CouplingPair":
        return replace(self, x0=self.x0[idx], x1=self.x1[idx])

    def describe(self) -> str:
        if self.provenance == "independent":
            return "independent"
        return f"reflow(k={self.level}, solver={self.solver})"


@dataclass(frozen=True)
class Guide:
    points: np.ndarray
    teacher: str
    tau: float | None
    mode: str


@dataclass(frozen=True)
class GuidedCoupling:
    base: CouplingPair
    guides: tuple[Guide, ...]

    def __post_init__(self):
        if not 1 <= len(self.guides) <= 2:
            raise UsageError(f"a guided coupling carries 1 or 2 guides, got {len(self.guides)}")
        for g in self.guides:
            if g.points.shape != self.base.x0.shape:
                raise UsageError("guide points must be index-aligned with the base coupling")

    @property
    def n(self) -> int:
        return self.base.n

    def take(self, idx: np.ndarray) -> "GuidedCoupling":
        return GuidedCoupling(self.base.take(idx), tuple(replace(g, points=g.points[idx]) for g in self.guides))


@dataclass(frozen=True)
class Objective:
    kind: ObjectiveKind = "rectified_flow"
    scale_mode: Literal["exact", "paper"] = "exact"
    eval_mode: Literal["flow", "onestep"] = "flow"
    guide_times: tuple[float, ...] | None = None
    guide_modes: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.kind not in GUIDES_NEEDED:
            raise ConfigError(f"unknown objective kind {self.kind!r}")
        if self.scale_mode not in ("exact", "paper"):
            raise ConfigError(f"unknown scale_mode {self.scale_mode!r}")
        if self.eval_mode not in ("flow", "onestep"):
            raise ConfigError(f"unknown eval_mode {self.eval_mode!r}")
        need = GUIDES_NEEDED[self.kind]
        times, modes = self.guide_times, self.guide_modes
        if need == 1:
            times = (0.5,) if times is None else times
            modes = ("one_step",) if modes is None else modes
        elif need == 2:
            times = (1 / 3, 2 / 3) if times is None else times
            modes = ("interp_velocity", "interp_velocity") if modes is None else modes
        else:
            times, modes = tuple(times or ()), tuple(modes or ())
        times = tuple(float(t) for t in times)
        modes = tuple(modes)
        if need == 2:
            if len(times) != 2:
                raise ConfigError(f"bezier3 needs exactly two guide times, got {len(times)}")
            if not times[0] < times[1]:
                raise ConfigError(f"bezier3 guide times must be increasing, got {times}")
        if len(times) != need or len(modes) != need:
            raise ConfigError(f"{self.kind} takes {need} guide time(s) and mode(s), got {len(times)} and {len(modes)}")
        for m in modes:
            if m not in GUIDE_MODES:
                raise ConfigError(f"unknown guide mode {m!r}")
        for t in times:
            if not 0.0 < t <= 1.0:
                raise ConfigError(f"guide time must lie in (0, 1], got {t}")
        object.__setattr__(self, "guide_times", times)
        object.__setattr__(self, "guide_modes", modes)

    @property
    def n_guides(self) -> int:
        return GUIDES_NEEDED[self.kind]


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    batch_size: int = 256
    total_steps: int = 5000
    t_sampling: Literal["uniform", "stratified"] = "uniform"
    strata: int = 8
    seed: int = 0
    mlp: MlpSpec = field(default_factory=lambda: MlpSpec(2))

    def __post_init__(self):
        if self.lr <= 0:
            raise ConfigError(f"lr must be > 0, got {self.lr}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.total_steps < 0:
            raise ConfigError(f"total_steps must be >= 0, got {self.total_steps}")
        if self.t_sampling not in ("uniform", "stratified"):
            raise ConfigError(f"unknown t_sampling {self.t_sampling!r}")
        if self.t_sampling == "stratified" and self.strata < 1:
            raise ConfigError("stratified sampling needs strata >= 1")


def _times(t) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    if (t < 0).any() or (t > 1).any() or not np.isfinite(t).all():
        raise DomainError("time must lie in [0, 1]")
    return t[..., None] if t.ndim else t


def rf_target(x0, x1, t):
    """Straight-line point and its (constant) velocity."""
    x0, x1 = np.asarray(x0, dtype=np.float64), np.asarray(x1, dtype=np.float64)
    tt = _times(t)
    return tt * x1 + (1.0 - tt) * x0, (x1 - x0) + 0.0 * tt


def distill_target(x0, x1):
    x0, x1 = np.asarray(x0, dtype=np.float64), np.asarray(x1, dtype=np.float64)
    if not (np.isfinite(x0).all() and np.isfinite(x1).all()):
        raise DomainError("non-finite pair")
    return rf_target(x0, x1, 0.0)


def bezier2_target(x0, x1, xT, t, scale_mode: str = "exact"):
    """Point on the quadratic path x0 -> xT -> x1 and its time derivative."""
    x0, x1, xT = (np.asarray(a, dtype=np.float64) for a in (x0, x1, xT))
    tt = _times(t)
    s = 1.0 - tt
    xt = s * s * x0 + 2.0 * tt * s * xT + tt * tt * x1
    half = (tt - 1.0) * x0 + (1.0 - 2.0 * tt) * xT + tt * x1
    if scale_mode == "exact":
        return xt, 2.0 * half
    if scale_mode == "paper":
        return xt, half
    raise ConfigError(f"unknown scale_mode {scale_mode!r}")


def bezier3_target(x0, x1, xT, xT2, t):
    """Point on the cubic path x0 -> xT -> xT2 -> x1 and its time derivative."""
    x0, x1, xT, xT2 = (np.asarray(a, dtype=np.float64) for a in (x0, x1, xT, xT2))
    tt = _times(t)
    s = 1.0 - tt
    xt = s ** 3 * x0 + 3.0 * tt * s * s * xT + 3.0 * tt * tt * s * xT2 + tt ** 3 * x1
    target = 3.0 * s * s * (xT - x0) + 6.0 * tt * s * (xT2 - xT) + 3.0 * tt * tt * (x1 - xT2)
    return xt, target


def guide_point(teacher, x0, x1, tau: float | None, mode: str) -> np.ndarray:
    """Intermediate control point produced by a teacher drift.

    ``teacher`` may be a :class:`VelocityField` or any callable ``f(x, t)``.
    """
    x0 = np.atleast_2d(np.asarray(x0, dtype=np.float64))
    x1 = np.atleast_2d(np.asarray(x1, dtype=np.float64))
    f = teacher
    zero = np.zeros(x0.shape[0])
    if mode == "one_step":
        return x0 + f(x0, zero)
    if mode not in GUIDE_MODES:
        raise ConfigError(f"unknown guide mode {mode!r}")
    if tau is None or not 0.0 < float(tau) <= 1.0:
        raise ConfigError(f"guide mode {mode} needs tau in (0, 1], got {tau}")
    tau = float(tau)
    if mode == "euler_to_tau":
        return x0 + tau * f(x0, zero)
    if mode == "interp_velocity":
        xs = tau * x1 + (1.0 - tau) * x0
        return x0 + f(xs, np.full(x0.shape[0], tau))
    return integrate(f, x0, SolverSpec("rk4", 100, 0.0, tau)).endpoint


def attach_guides(coupling: CouplingPair, objective: Objective, teachers: Sequence) -> GuidedCoupling:
    """Compute and freeze guide points for every pair.

    One teacher is reused for every guide; otherwise give one per guide.
    """
    k = objective.n_guides
    if k == 0:
        raise UsageError(f"{objective.kind} does not use guide points")
    teachers = list(teachers)
    if len(teachers) == 1:
        teachers = teachers * k
    if len(teachers) != k:
        raise UsageError(f"{objective.kind} needs 1 or {k} teachers, got {len(teachers)}")
    guides = []
    for teacher, tau, mode in zip(teachers, objective.guide_times, objective.guide_modes):
        pts = guide_point(teacher, coupling.x0, coupling.x1, tau, mode)
        label = getattr(teacher, "label", "callable")
        guides.append(Guide(pts, label, None if mode == "one_step" else tau, mode))
    return GuidedCoupling(coupling, tuple(guides))


def reflow_pairs(teacher, pi0, solver: SolverSpec = SolverSpec(), level: int = 1) -> CouplingPair:
    """Couple each source point with where the teacher flow carries it.

    ``level`` is the teacher's rectification level k; a rectified flow
    trained on the returned coupling is the (k+1)-rectified flow.
    """
    if (solver.t_start, solver.t_end) != (0.0, 1.0):
        raise UsageError("reflow simulation must span [0, 1]")
    pi0 = np.atleast_2d(np.asarray(pi0, dtype=np.float64))
    traj = integrate(teacher, pi0, solver)
    return CouplingPair(pi0.copy(), traj.endpoint.copy(), "reflow", level, solver.describe())


def assemble_batch(objective: Objective, coupling, t_draws, eval_mode: str | None = None):
    """Regression triples ``(x_eval, t_eval, target)`` for one minibatch."""
    eval_mode = eval_mode or objective.eval_mode
    guided = isinstance(coupling, GuidedCoupling)
    need = objective.n_guides
    if need and (not guided or len(coupling.guides) != need):
        raise UsageError(f"{objective.kind} needs a coupling with {need} guide(s)")
    if not need and guided:
        raise UsageError(f"{objective.kind} takes a plain coupling, not a guided one")
    base = coupling.base if guided else coupling
    t = np.asarray(t_draws, dtype=np.float64).reshape(-1)
    if t.shape[0] != base.n:
        raise UsageError(f"{t.shape[0]} time draws for {base.n} pairs")
    if objective.kind == "distill":
        xe, target = distill_target(base.x0, base.x1)
        return xe, np.zeros(base.n), target
    if objective.kind == "rectified_flow":
        xt, target = rf_target(base.x0, base.x1, t)
    elif objective.kind == "bezier2":
        xt, target = bezier2_target(base.x0, base.x1, coupling.guides[0].points, t, objective.scale_mode)
    else:
        xt, target = bezier3_target(base.x0, base.x1, coupling.guides[0].points, coupling.guides[1].points, t)
    if eval_mode == "onestep":
        return base.x0.copy(), np.zeros(base.n), target
    return xt, t, target


def draw_times(rng: np.random.Generator, n: int, config: TrainConfig) -> np.ndarray:
    u = rng.random(n)
    if config.t_sampling == "uniform":
        return u
    m = config.strata
    bins = rng.permutation(np.arange(n) % m)
    return (bins + u) / m


CouplingSource = Union[CouplingPair, GuidedCoupling, Callable[[np.random.Generator, int], CouplingPair]]


def train(config: TrainConfig, objective: Objective, data: CouplingSource,
          teachers: Sequence = (), init: MlpParams | None = None,
          label: str = "student") -> tuple[VelocityField, np.ndarray]:
    """Minimise the objective with Adam; returns the field and per-step losses.

    ``data`` is a fixed coupling (minibatches drawn with replacement) or a
    callable ``(rng, n) -> CouplingPair`` producing fresh pairs every step.
    """
    teachers = list(teachers)
    needs_guides = objective.n_guides > 0
    if not needs_guides and teachers:
        raise UsageError(f"{objective.kind} does not take teachers")
    if needs_guides and not teachers and not isinstance(data, GuidedCoupling):
        raise UsageError(f"{objective.kind} needs teachers or a pre-guided coupling")
    if needs_guides and isinstance(data, CouplingPair):
        data = attach_guides(data, objective, teachers)

    spec = config.mlp
    params = init if init is not None else init_params(spec, rng_stream(config.seed, "init"))
    if params.spec != spec:
        raise ConfigError("initial parameters do not match the configured network")
    state = AdamState.fresh(params, config.lr, config.beta1, config.beta2, config.epsilon)
    batch_rng = rng_stream(config.seed, "minibatch")
    time_rng = rng_stream(config.seed, "time")
    data_rng = rng_stream(config.seed, "data")

    losses = np.empty(config.total_steps)
    for step in range(config.total_steps):
        if callable(data) and not isinstance(data, (CouplingPair, GuidedCoupling)):
            batch = data(data_rng, config.batch_size)
            if needs_guides:
                batch = attach_guides(batch, objective, teachers)
        else:
            batch = data.take(batch_rng.integers(data.n, size=config.batch_size))
        t = draw_times(time_rng, config.batch_size, config)
        x, te, target = assemble_batch(objective, batch, t)
        loss, grads = loss_and_grad(params, x, te, target)
        if not np.isfinite(loss):
            raise TrainingDiverged(step)
        losses[step] = loss
        params, state = adam_step(params, grads, state)
    return VelocityField(spec, params, label), losses


def _columns(prefix: str, d: int) -> list[str]:
    return [f"{prefix}_{j}" for j in range(d)]


def write_coupling_csv(path: str | Path, coupling: CouplingPair | GuidedCoupling, comment: str | None = None) -> None:
    from .csvio import write_csv

    guided = isinstance(coupling, GuidedCoupling)
    base = coupling.base if guided else coupling
    meta = {"provenance": base.provenance, "level": base.level, "solver": base.solver}
    blocks = [base.x0, base.x1]
    header = _columns("x0", base.dim) + _columns("x1", base.dim)
    if guided:
        meta["guides"] = [{"teacher": g.teacher, "tau": g.tau, "mode": g.mode} for g in coupling.guides]
        for name, g in zip(("xT", "xT2"), coupling.guides):
            blocks.append(g.points)
            header += _columns(name, base.dim)
    lines = "provenance " + json.dumps(meta, sort_keys=True)
    if comment:
        lines += "\n" + comment
    write_csv(path, header, np.concatenate(blocks, axis=1), lines)


def read_coupling_csv(path: str | Path) -> CouplingPair | GuidedCoupling:
    from .csvio import read_csv

    comments, header, data = read_csv(path)
    meta = {"provenance": "independent", "level": 0, "solver": None}
    for line in comments:
        if line.startswith("provenance "):
            meta.update(json.loads(line[len("provenance "):]))
    cols = {name: [i for i, h in enumerate(header) if h.startswith(name + "_")] for name in ("x0", "x1", "xT", "xT2")}
    if not cols["x0"] or len(cols["x0"]) != len(cols["x1"]):
        raise UsageError(f"{path}: coupling file needs matching x0_* and x1_* columns")
    base = CouplingPair(data[:, cols["x0"]], data[:, cols["x1"]], meta["provenance"], int(meta["level"]), meta["solver"])
    guide_meta = meta.get("guides") or []
    guides = []
    for name, gm in zip(("xT", "xT2"), guide_meta):
        guides.append(Guide(data[:, cols[name]], gm["teacher"], gm["tau"], gm["mode"]))
    return GuidedCoupling(base, tuple(guides)) if guides else base
