"""Seeded samplers for the source and target point clouds.

Randomness comes from numpy's PCG64 bit generator. Each consumer asks for
a named stream (``"sample"``, ``"pairing"``, ``"minibatch"``, ...); the
stream is seeded by ``SeedSequence([seed, crc32(name)])`` so streams are
independent of each other and stable across platforms and numpy versions
that keep PCG64's output fixed.
"""
from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np

from .errors import ConfigError, UsageError

Kind = Literal["standard_gaussian", "gaussian", "gaussian_mixture", "two_moons", "checkerboard"]

# two-moons noise is truncated at this many standard deviations so the
# bounding box returned by DistSpec.extent_box is a hard bound
MOONS_NOISE_CLIP = 4.0


def rng_stream(seed: int, purpose: str) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), zlib.crc32(purpose.encode())])))


def derive_seed(seed: int, purpose: str) -> int:
    """Integer seed for a named sub-task, for APIs that take ints."""
    return int(rng_stream(seed, purpose).integers(2**62))


@dataclass(frozen=True)
class MixtureComponent:
    weight: float
    mean: tuple[float, ...]
    std: float


@dataclass(frozen=True)
class DistSpec:
    kind: Kind = "standard_gaussian"
    dim: int = 2
    mean: tuple[float, ...] | None = None
    variance: tuple[float, ...] | None = None
    components: tuple[MixtureComponent, ...] = field(default_factory=tuple)
    noise_std: float = 0.1
    cells: int = 4
    extent: float = 2.0

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigError(f"dim must be >= 1, got {self.dim}")
        if self.kind == "gaussian":
            mean = self.mean if self.mean is not None else (0.0,) * self.dim
            var = self.variance if self.variance is not None else (1.0,) * self.dim
            if len(mean) != self.dim or len(var) != self.dim:
                raise ConfigError("gaussian mean/variance length must equal dim")
            if any(v < 0 for v in var):
                raise ConfigError("gaussian variances must be non-negative")
            object.__setattr__(self, "mean", tuple(map(float, mean)))
            object.__setattr__(self, "variance", tuple(map(float, var)))
        elif self.kind == "gaussian_mixture":
            comps = tuple(c if isinstance(c, MixtureComponent) else MixtureComponent(**c) for c in self.components)
            if not comps:
                raise ConfigError("gaussian_mixture needs at least one component")
            w = np.array([c.weight for c in comps], dtype=np.float64)
            if (w < 0).any() or abs(w.sum() - 1.0) > 1e-12:
                raise ConfigError(f"mixture weights must be non-negative and sum to 1, got {w.tolist()}")
            for c in comps:
                if len(c.mean) != self.dim or c.std < 0:
                    raise ConfigError("mixture component mean must match dim and std must be >= 0")
            object.__setattr__(self, "components", comps)
        elif self.kind in ("two_moons", "checkerboard"):
            if self.dim != 2:
                raise ConfigError(f"{self.kind} is only defined for dim = 2")
            if self.kind == "checkerboard" and (self.cells < 1 or self.extent <= 0):
                raise ConfigError("checkerboard needs cells >= 1 and extent > 0")
            if self.kind == "two_moons" and self.noise_std < 0:
                raise ConfigError("noise_std must be >= 0")
        elif self.kind != "standard_gaussian":
            raise ConfigError(f"unknown distribution kind {self.kind!r}")

    def extent_box(self) -> tuple[np.ndarray, np.ndarray]:
        """Hard bounding box for the bounded families."""
        if self.kind == "checkerboard":
            return np.full(2, -self.extent), np.full(2, self.extent)
        if self.kind == "two_moons":
            pad = MOONS_NOISE_CLIP * self.noise_std
            return np.array([-1.0 - pad, -0.5 - pad]), np.array([2.0 + pad, 1.0 + pad])
        raise UsageError(f"{self.kind} has unbounded support")


def four_mode_mixture(side: float = 6.0, std: float = 0.4) -> DistSpec:
    h = side / 2
    corners = [(-h, -h), (-h, h), (h, -h), (h, h)]
    return DistSpec("gaussian_mixture", 2, components=tuple(MixtureComponent(0.25, c, std) for c in corners))


def sample(spec: DistSpec, n: int, seed: int) -> np.ndarray:
    """Draw ``n`` i.i.d. points, shape (n, dim)."""
    if n < 1:
        raise UsageError(f"need n >= 1, got {n}")
    rng = rng_stream(seed, "sample")
    d = spec.dim
    if spec.kind == "standard_gaussian":
        return rng.standard_normal((n, d))
    if spec.kind == "gaussian":
        z = rng.standard_normal((n, d))
        return np.asarray(spec.mean) + np.sqrt(np.asarray(spec.variance)) * z
    if spec.kind == "gaussian_mixture":
        # z first, labels second: a one-component mixture consumes the same
        # stream prefix as the plain gaussian sampler
        z = rng.standard_normal((n, d))
        w = np.array([c.weight for c in spec.components])
        labels = rng.choice(len(w), size=n, p=w)
        means = np.array([c.mean for c in spec.components], dtype=np.float64)
        stds = np.array([c.std for c in spec.components], dtype=np.float64)
        return means[labels] + stds[labels, None] * z
    if spec.kind == "two_moons":
        return _two_moons(rng, n, spec.noise_std)
    return _checkerboard(rng, n, spec.cells, spec.extent)


def _two_moons(rng: np.random.Generator, n: int, noise_std: float) -> np.ndarray:
    upper = rng.random(n) < 0.5
    theta = np.pi * rng.random(n)
    x = np.where(upper, np.cos(theta), 1.0 - np.cos(theta))
    y = np.where(upper, np.sin(theta), 0.5 - np.sin(theta))
    noise = rng.standard_normal((n, 2))
    bad = np.abs(noise) > MOONS_NOISE_CLIP
    while bad.any():
        noise[bad] = rng.standard_normal(int(bad.sum()))
        bad = np.abs(noise) > MOONS_NOISE_CLIP
    return np.stack([x, y], axis=1) + noise_std * noise


def _checkerboard(rng: np.random.Generator, n: int, cells: int, extent: float) -> np.ndarray:
    # pick a "black" cell uniformly, then a uniform point inside it
    black = [(i, j) for i in range(cells) for j in range(cells) if (i + j) % 2 == 0]
    idx = rng.integers(len(black), size=n)
    ij = np.array(black, dtype=np.float64)[idx]
    width = 2 * extent / cells
    return -extent + (ij + rng.random((n, 2))) * width


def make_independent_coupling(a: np.ndarray, b: np.ndarray, seed: int):
    """Pair ``a[i]`` with ``b[perm[i]]`` for a seeded random permutation."""
    from .pipeline import CouplingPair

    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise UsageError(f"cannot pair batches of shapes {a.shape} and {b.shape}")
    perm = rng_stream(seed, "pairing").permutation(len(b))
    return CouplingPair(a, b[perm], "independent")


def write_batch_csv(path: str | Path, batch: np.ndarray, comment: str | None = None) -> None:
    from .csvio import write_csv

    batch = np.atleast_2d(batch)
    write_csv(path, [f"x{k}" for k in range(batch.shape[1])], batch, comment)


def read_batch_csv(path: str | Path) -> np.ndarray:
    from .csvio import read_csv

    _, header, data = read_csv(path)
    return data
