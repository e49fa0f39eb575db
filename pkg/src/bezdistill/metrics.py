"""Transport cost, straightness, exact W2, crossings and endpoint error."""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .errors import UnsupportedDimensionError, UsageError
from .field import TrajectoryRecord

W2_MAX_POINTS = 2048


def _pair_arrays(pairs) -> tuple[np.ndarray, np.ndarray]:
    if hasattr(pairs, "x0"):
        return pairs.x0, pairs.x1
    x0, x1 = pairs
    return np.atleast_2d(np.asarray(x0, dtype=np.float64)), np.atleast_2d(np.asarray(x1, dtype=np.float64))


def transport_cost(pairs) -> float:
    """Mean squared displacement of a coupling (a CouplingPair or ``(x0, x1)``)."""
    x0, x1 = _pair_arrays(pairs)
    if x0.size == 0:
        raise UsageError("transport cost of an empty coupling")
    d = x1 - x0
    return float(np.mean(np.sum(d * d, axis=1)))


def straightness(traj: TrajectoryRecord) -> float:
    """Mean squared gap between each step's velocity and the overall chord velocity."""
    times, states = traj.times, traj.states
    if len(times) < 2:
        raise UsageError("straightness needs at least two time points")
    chord = (states[-1] - states[0]) / (times[-1] - times[0])
    step_v = np.diff(states, axis=0) / np.diff(times)[:, None, None]
    gap = step_v - chord[None]
    return float(np.mean(np.sum(gap * gap, axis=2)))


def w2_exact(a, b) -> float:
    """Squared 2-Wasserstein distance between equal-size point sets."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if a.shape != b.shape:
        raise UsageError(f"point sets differ in shape: {a.shape} vs {b.shape}")
    if a.shape[0] > W2_MAX_POINTS:
        raise UsageError(f"exact W2 is limited to {W2_MAX_POINTS} points, got {a.shape[0]}")
    cost = cdist(a, b, "sqeuclidean")
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].mean())


def _orient(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def _paths_cross(p: np.ndarray, q: np.ndarray, tol: float) -> bool:
    # p, q: (S+1, 2) polylines. Proper crossing = strict sign change on both
    # segments' orientation tests, beyond tol.
    a0, a1 = p[:-1], p[1:]
    b0, b1 = q[:-1], q[1:]
    ax0, ay0, ax1, ay1 = (v[:, None] for v in (a0[:, 0], a0[:, 1], a1[:, 0], a1[:, 1]))
    bx0, by0, bx1, by1 = (v[None, :] for v in (b0[:, 0], b0[:, 1], b1[:, 0], b1[:, 1]))
    o1 = _orient(ax0, ay0, ax1, ay1, bx0, by0)
    o2 = _orient(ax0, ay0, ax1, ay1, bx1, by1)
    o3 = _orient(bx0, by0, bx1, by1, ax0, ay0)
    o4 = _orient(bx0, by0, bx1, by1, ax1, ay1)
    split_b = ((o1 > tol) & (o2 < -tol)) | ((o1 < -tol) & (o2 > tol))
    split_a = ((o3 > tol) & (o4 < -tol)) | ((o3 < -tol) & (o4 > tol))
    return bool((split_a & split_b).any())


def crossing_count(traj: TrajectoryRecord, tol: float = 1e-12) -> int:
    """Number of particle pairs whose 2D polylines properly intersect."""
    states = traj.states
    if states.shape[2] != 2:
        raise UnsupportedDimensionError("crossing detection is implemented for 2D only")
    n = states.shape[1]
    if n < 2:
        raise UsageError("crossing count needs at least two particles")
    lo, hi = states.min(axis=0), states.max(axis=0)
    count = 0
    for i in range(n - 1):
        # bounding-box prefilter
        overlap = np.all((lo[i + 1:] <= hi[i]) & (hi[i + 1:] >= lo[i]), axis=1)
        for j in np.nonzero(overlap)[0] + i + 1:
            count += _paths_cross(states[:, i], states[:, j], tol)
    return count


def endpoint_mse(predicted, reference) -> float:
    p = np.atleast_2d(np.asarray(predicted, dtype=np.float64))
    r = np.atleast_2d(np.asarray(reference, dtype=np.float64))
    if p.shape != r.shape:
        raise UsageError(f"batches differ in shape: {p.shape} vs {r.shape}")
    d = p - r
    return float(np.mean(np.sum(d * d, axis=1)))


@dataclass(frozen=True)
class MetricsReport:
    label: str
    objective: str
    level: int
    seed: int
    solver: str
    sampler: str
    transport_cost: float
    straightness: float
    w2_to_target: float
    crossing_count: int
    endpoint_mse: float

    def __post_init__(self):
        for name in ("transport_cost", "straightness", "w2_to_target", "endpoint_mse"):
            if not np.isfinite(getattr(self, name)):
                raise UsageError(f"metric {name} is not finite")

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def row(self) -> list:
        return [getattr(self, c) for c in self.columns()]

    def to_text(self) -> str:
        d = asdict(self)
        head = f"{self.label}  [{self.objective}, k={self.level}, seed={self.seed}, {self.sampler}, solver={self.solver}]"
        body = [f"  {k:<15} {d[k]:.6g}" for k in ("transport_cost", "straightness", "w2_to_target", "endpoint_mse")]
        body.insert(2, f"  {'crossing_count':<15} {self.crossing_count}")
        return "\n".join([head, *body])
