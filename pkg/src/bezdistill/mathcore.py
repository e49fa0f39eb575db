"""Feed-forward network with exact reverse-mode gradients, plus Adam.

Everything is float64 numpy. Weight matrices are stored ``(fan_in, fan_out)``
so a layer is ``h @ W + b`` on row-major batches.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Literal

import numpy as np

from .errors import DomainError, ShapeError, UsageError, ConfigError

Activation = Literal["tanh", "relu"]
TimeEmbedding = Literal["append_scalar", "sinusoidal"]


@dataclass(frozen=True)
class MlpSpec:
    data_dim: int
    hidden_sizes: tuple[int, ...] = (64, 64, 64)
    activation: Activation = "tanh"
    time_embedding: TimeEmbedding = "append_scalar"
    frequencies: int = 4

    def __post_init__(self):
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))
        if self.data_dim < 1:
            raise ConfigError(f"data_dim must be >= 1, got {self.data_dim}")
        if any(h < 1 for h in self.hidden_sizes):
            raise ConfigError(f"hidden sizes must be >= 1, got {self.hidden_sizes}")
        if self.activation not in ("tanh", "relu"):
            raise ConfigError(f"unknown activation {self.activation!r}")
        if self.time_embedding not in ("append_scalar", "sinusoidal"):
            raise ConfigError(f"unknown time_embedding {self.time_embedding!r}")
        if self.time_embedding == "sinusoidal" and self.frequencies < 1:
            raise ConfigError("sinusoidal time embedding needs frequencies >= 1")

    @property
    def time_dim(self) -> int:
        return 1 if self.time_embedding == "append_scalar" else 2 * self.frequencies

    @property
    def input_dim(self) -> int:
        return self.data_dim + self.time_dim

    @property
    def output_dim(self) -> int:
        return self.data_dim

    @property
    def layer_shapes(self) -> list[tuple[int, int]]:
        sizes = [self.input_dim, *self.hidden_sizes, self.output_dim]
        return list(zip(sizes[:-1], sizes[1:]))

    @property
    def n_params(self) -> int:
        return sum(i * o + o for i, o in self.layer_shapes)


@dataclass(frozen=True)
class MlpParams:
    """Per-layer weights and biases, tied to the spec they were built for."""

    spec: MlpSpec
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    def __post_init__(self):
        shapes = self.spec.layer_shapes
        if len(self.weights) != len(shapes) or len(self.biases) != len(shapes):
            raise ShapeError(f"expected {len(shapes)} layers, got {len(self.weights)}")
        for k, ((i, o), w, b) in enumerate(zip(shapes, self.weights, self.biases)):
            if w.shape != (i, o) or b.shape != (o,):
                raise ShapeError(f"layer {k}: expected W{(i, o)} b{(o,)}, got W{w.shape} b{b.shape}")

    def flatten(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b)
        return np.concatenate(parts).astype(np.float64)

    @classmethod
    def from_flat(cls, spec: MlpSpec, flat: np.ndarray) -> "MlpParams":
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (spec.n_params,):
            raise ShapeError(f"spec needs {spec.n_params} parameters, got {flat.size}")
        weights, biases, pos = [], [], 0
        for i, o in spec.layer_shapes:
            weights.append(flat[pos:pos + i * o].reshape(i, o).copy())
            pos += i * o
            biases.append(flat[pos:pos + o].copy())
            pos += o
        return cls(spec, tuple(weights), tuple(biases))

    def map(self, fn, *others: "MlpParams") -> "MlpParams":
        ws = tuple(fn(w, *(p.weights[k] for p in others)) for k, w in enumerate(self.weights))
        bs = tuple(fn(b, *(p.biases[k] for p in others)) for k, b in enumerate(self.biases))
        return MlpParams(self.spec, ws, bs)

    def zeros_like(self) -> "MlpParams":
        return self.map(np.zeros_like)

    def is_finite(self) -> bool:
        return all(np.isfinite(a).all() for a in (*self.weights, *self.biases))


def init_params(spec: MlpSpec, rng: np.random.Generator | int) -> MlpParams:
    """He-normal weights (variance 2/fan_in), zero biases."""
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    weights, biases = [], []
    for i, o in spec.layer_shapes:
        weights.append(rng.normal(0.0, np.sqrt(2.0 / i), size=(i, o)))
        biases.append(np.zeros(o))
    return MlpParams(spec, tuple(weights), tuple(biases))


def zero_params(spec: MlpSpec) -> MlpParams:
    return MlpParams(
        spec,
        tuple(np.zeros(s) for s in spec.layer_shapes),
        tuple(np.zeros(o) for _, o in spec.layer_shapes),
    )


def _act(kind: str, z: np.ndarray) -> np.ndarray:
    return np.tanh(z) if kind == "tanh" else np.maximum(z, 0.0)


def _act_grad(kind: str, z: np.ndarray, h: np.ndarray) -> np.ndarray:
    # derivative of the activation at z, given h = act(z)
    return 1.0 - h * h if kind == "tanh" else (z > 0).astype(np.float64)


def embed_time(spec: MlpSpec, t: np.ndarray) -> np.ndarray:
    """Time features for a column of times, shape (n, time_dim)."""
    t = t.reshape(-1, 1)
    if spec.time_embedding == "append_scalar":
        return t
    freqs = np.pi * np.arange(1, spec.frequencies + 1)
    return np.concatenate([np.sin(t * freqs), np.cos(t * freqs)], axis=1)


def _prepare(spec: MlpSpec, x, t) -> tuple[np.ndarray, np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    x2 = x.reshape(1, -1) if single else x
    if x2.ndim != 2 or x2.shape[1] != spec.data_dim:
        raise ShapeError(f"expected points of dimension {spec.data_dim}, got shape {x.shape}")
    t = np.asarray(t, dtype=np.float64)
    if t.ndim == 0:
        t = np.full(x2.shape[0], float(t))
    t = t.reshape(-1)
    if t.shape[0] != x2.shape[0]:
        raise ShapeError(f"{t.shape[0]} times for {x2.shape[0]} points")
    if not (np.isfinite(x2).all() and np.isfinite(t).all()):
        raise DomainError("non-finite network input")
    if (t < 0).any() or (t > 1).any():
        raise DomainError("time must lie in [0, 1]")
    return x2, t, single


def _forward_cache(params: MlpParams, x2: np.ndarray, t: np.ndarray):
    spec = params.spec
    h = np.concatenate([x2, embed_time(spec, t)], axis=1)
    hs, zs = [h], []
    last = len(params.weights) - 1
    for k, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = h @ w + b
        zs.append(z)
        h = z if k == last else _act(spec.activation, z)
        hs.append(h)
    return hs, zs


def mlp_forward(params: MlpParams, x, t) -> np.ndarray:
    """Evaluate v(x, t).

    ``x`` is a single point ``(d,)`` or a batch ``(n, d)``; ``t`` a scalar or
    one time per row. The output layer is linear.
    """
    x2, t, single = _prepare(params.spec, x, t)
    hs, _ = _forward_cache(params, x2, t)
    out = hs[-1]
    return out[0] if single else out


def mlp_input_jacobian(params: MlpParams, x, t: float) -> np.ndarray:
    """d v / d x at a single point, shape (d, d) with rows indexing outputs."""
    x2, tt, _ = _prepare(params.spec, np.asarray(x, dtype=np.float64).reshape(1, -1), t)
    hs, zs = _forward_cache(params, x2, tt)
    spec = params.spec
    # seed with identity on the outputs and push back through every layer
    g = np.eye(spec.output_dim)
    last = len(params.weights) - 1
    for k in range(last, -1, -1):
        if k != last:
            g = g * _act_grad(spec.activation, zs[k][0], hs[k + 1][0])
        g = g @ params.weights[k].T
    return g[:, : spec.data_dim]


def loss_and_grad(params: MlpParams, x, t, target) -> tuple[float, MlpParams]:
    """Mean squared regression loss ``mean_i ||target_i - v(x_i, t_i)||^2``.

    Targets are constants; the gradient is taken only through the network.
    """
    if np.size(x) == 0:
        raise UsageError("loss_and_grad needs a non-empty batch")
    x2, tt, _ = _prepare(params.spec, x, t)
    n = x2.shape[0]
    target = np.asarray(target, dtype=np.float64)
    if target.ndim == 1:
        target = target.reshape(1, -1)
    if target.shape != (n, params.spec.output_dim):
        raise ShapeError(f"targets must have shape {(n, params.spec.output_dim)}, got {target.shape}")
    hs, zs = _forward_cache(params, x2, tt)
    resid = hs[-1] - target
    loss = float(np.sum(resid * resid) / n)

    spec = params.spec
    last = len(params.weights) - 1
    gw: list[np.ndarray] = [None] * (last + 1)  # type: ignore[list-item]
    gb: list[np.ndarray] = [None] * (last + 1)  # type: ignore[list-item]
    delta = (2.0 / n) * resid
    for k in range(last, -1, -1):
        if k != last:
            delta = delta * _act_grad(spec.activation, zs[k], hs[k + 1])
        gw[k] = hs[k].T @ delta
        gb[k] = delta.sum(axis=0)
        if k:
            delta = delta @ params.weights[k].T
    return loss, MlpParams(spec, tuple(gw), tuple(gb))


@dataclass(frozen=True)
class AdamState:
    m: MlpParams
    v: MlpParams
    step: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def fresh(cls, params: MlpParams, lr: float = 1e-3, beta1: float = 0.9,
              beta2: float = 0.999, epsilon: float = 1e-8) -> "AdamState":
        return cls(params.zeros_like(), params.zeros_like(), 0, lr, beta1, beta2, epsilon)


def adam_step(params: MlpParams, grads: MlpParams, state: AdamState) -> tuple[MlpParams, AdamState]:
    if grads.spec.layer_shapes != params.spec.layer_shapes or state.m.spec.layer_shapes != params.spec.layer_shapes:
        raise ShapeError("parameter, gradient and optimizer shapes disagree")
    if state.step < 0:
        raise UsageError("optimizer step counter must be >= 0")
    b1, b2 = state.beta1, state.beta2
    step = state.step + 1
    m = state.m.map(lambda m_, g: b1 * m_ + (1.0 - b1) * g, grads)
    v = state.v.map(lambda v_, g: b2 * v_ + (1.0 - b2) * g * g, grads)
    c1 = 1.0 - b1 ** step
    c2 = 1.0 - b2 ** step
    lr, eps = state.lr, state.epsilon
    new = params.map(lambda p, m_, v_: p - lr * (m_ / c1) / (np.sqrt(v_ / c2) + eps), m, v)
    return new, replace(state, m=m, v=v, step=step)

