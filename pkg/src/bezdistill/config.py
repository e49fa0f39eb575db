"""Experiment configuration: strict YAML parsing into dataclasses."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import yaml

from .datasets import DistSpec, MixtureComponent, four_mode_mixture
from .errors import ConfigError
from .field import SolverSpec
from .mathcore import MlpSpec
from .pipeline import Objective, TrainConfig


@dataclass(frozen=True)
class DataConfig:
    n_pairs: int = 10000
    n_eval: int = 256
    n_crossing: int = 64
    coupling: str | None = None

    def __post_init__(self):
        for name in ("n_pairs", "n_eval", "n_crossing"):
            if getattr(self, name) < 1:
                raise ConfigError(f"data.{name} must be >= 1")
        if self.n_crossing < 2:
            raise ConfigError("data.n_crossing must be >= 2")


@dataclass(frozen=True)
class ExperimentConfig:
    pi0: DistSpec = field(default_factory=DistSpec)
    pi1: DistSpec = field(default_factory=four_mode_mixture)
    mlp: MlpSpec = field(default_factory=lambda: MlpSpec(2))
    train: TrainConfig = field(default_factory=TrainConfig)
    objective: Objective = field(default_factory=lambda: Objective("bezier2"))
    solver: SolverSpec = field(default_factory=SolverSpec)
    data: DataConfig = field(default_factory=DataConfig)
    reflow_level: int = 1
    seed: int = 0
    out: str = "runs/default"
    teachers: tuple[str, ...] = ()

    def __post_init__(self):
        if self.pi0.dim != self.pi1.dim:
            raise ConfigError(f"pi0 has dim {self.pi0.dim} but pi1 has dim {self.pi1.dim}")
        if self.mlp.data_dim != self.pi0.dim:
            raise ConfigError(f"mlp data_dim {self.mlp.data_dim} differs from data dim {self.pi0.dim}")
        if self.reflow_level < 1:
            raise ConfigError("reflow_level must be >= 1")
        if self.train.mlp != self.mlp or self.train.seed != self.seed:
            object.__setattr__(self, "train", replace(self.train, mlp=self.mlp, seed=self.seed))

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, seed=seed, train=replace(self.train, seed=seed))

    def digest(self) -> str:
        """Hash of everything that affects numbers; output paths are excluded."""
        d = asdict(self)
        for k in ("out", "teachers"):
            d.pop(k)
        d["data"].pop("coupling")
        return hashlib.sha256(json.dumps(d, sort_keys=True, default=str).encode()).hexdigest()[:16]


_TOP_KEYS = {f.name for f in fields(ExperimentConfig)}


def _strict(section: str, raw: Any, allowed: set[str]) -> dict:
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{section}: expected a mapping, got {type(raw).__name__}")
    for key in raw:
        if key not in allowed:
            raise ConfigError(f"unknown config key '{section}.{key}'" if section else f"unknown config key '{key}'")
    return dict(raw)


def _dist(section: str, raw: Any, default: DistSpec) -> DistSpec:
    if raw is None:
        return default
    d = _strict(section, raw, {f.name for f in fields(DistSpec)})
    comps = d.pop("components", None)
    if comps is not None:
        parsed = []
        for i, c in enumerate(comps):
            c = _strict(f"{section}.components[{i}]", c, {"weight", "mean", "std"})
            try:
                parsed.append(MixtureComponent(float(c["weight"]), tuple(map(float, c["mean"])), float(c["std"])))
            except KeyError as exc:
                raise ConfigError(f"{section}.components[{i}] is missing key {exc}") from exc
        d["components"] = tuple(parsed)
    for k in ("mean", "variance"):
        if d.get(k) is not None:
            d[k] = tuple(map(float, d[k]))
    if d.get("kind", "standard_gaussian") == "gaussian_mixture" and "components" not in d:
        d["components"] = default.components if default.kind == "gaussian_mixture" else four_mode_mixture().components
    return _build(section, DistSpec, d)


def _build(section: str, cls, kwargs: dict):
    try:
        return cls(**kwargs)
    except ConfigError as exc:
        raise ConfigError(f"{section}: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{section}: {exc}") from exc


def parse_config(raw: dict | None) -> ExperimentConfig:
    raw = _strict("", raw or {}, _TOP_KEYS)
    base = ExperimentConfig()
    pi0 = _dist("pi0", raw.get("pi0"), base.pi0)
    pi1 = _dist("pi1", raw.get("pi1"), base.pi1)

    m = _strict("mlp", raw.get("mlp"), {"hidden_sizes", "activation", "time_embedding", "frequencies"})
    mlp = _build("mlp", MlpSpec, {"data_dim": pi0.dim, **m})

    t = _strict("train", raw.get("train"),
                {"lr", "beta1", "beta2", "epsilon", "batch_size", "total_steps", "t_sampling", "strata"})
    seed = int(raw.get("seed", base.seed))
    train = _build("train", TrainConfig, {**t, "seed": seed, "mlp": mlp})

    o = _strict("objective", raw.get("objective"), {"kind", "scale_mode", "eval_mode", "guide_times", "guide_modes"})
    for k in ("guide_times", "guide_modes"):
        if o.get(k) is not None:
            o[k] = tuple(o[k])
    objective = _build("objective", Objective, {"kind": "bezier2", **o})

    s = _strict("solver", raw.get("solver"), {"method", "steps"})
    solver = _build("solver", SolverSpec, s)
    data = _build("data", DataConfig, _strict("data", raw.get("data"), {f.name for f in fields(DataConfig)}))

    teachers = tuple(str(p) for p in (raw.get("teachers") or ()))
    return _build("config", ExperimentConfig, dict(
        pi0=pi0, pi1=pi1, mlp=mlp, train=train, objective=objective, solver=solver, data=data,
        reflow_level=int(raw.get("reflow_level", base.reflow_level)), seed=seed,
        out=str(raw.get("out", base.out)), teachers=teachers,
    ))


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    cfg = parse_config(raw)
    base = path.parent
    # relative paths inside a config resolve against the config's directory
    resolve = lambda p: p if p is None or Path(p).is_absolute() else str(base / p)  # noqa: E731
    cfg = replace(cfg, teachers=tuple(resolve(p) for p in cfg.teachers),
                  data=replace(cfg.data, coupling=resolve(cfg.data.coupling)))
    for p in cfg.teachers:
        if not Path(p).is_file():
            raise ConfigError(f"teachers: weight file not found: {p}")
    if cfg.data.coupling and not Path(cfg.data.coupling).is_file():
        raise ConfigError(f"data.coupling: file not found: {cfg.data.coupling}")
    return cfg
