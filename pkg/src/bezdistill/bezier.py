"""Arbitrary-degree Bezier curves on [0, 1]."""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import DomainError, UnsupportedDimensionError, UsageError

MAX_DEGREE = 20


@dataclass(frozen=True)
class BezierSpec:
    control_points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.control_points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 2:
            raise UsageError("a Bezier curve needs at least two control points")
        if pts.shape[0] - 1 > MAX_DEGREE:
            raise UsageError(f"degree {pts.shape[0] - 1} exceeds the supported maximum {MAX_DEGREE}")
        if not np.isfinite(pts).all():
            raise DomainError("control points must be finite")
        object.__setattr__(self, "control_points", pts)

    @property
    def degree(self) -> int:
        return self.control_points.shape[0] - 1


def _check_t(t: float) -> float:
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"Bezier parameter must lie in [0, 1], got {t}")
    return t


def _bernstein_sum(points: np.ndarray, t: float) -> np.ndarray:
    n = points.shape[0] - 1
    s = 1.0 - t
    out = np.zeros(points.shape[1])
    for i in range(n + 1):
        out += comb(n, i) * s ** (n - i) * t ** i * points[i]
    return out


def bernstein_eval(spec: BezierSpec, t: float) -> np.ndarray:
    """Direct summation over the Bernstein basis."""
    return _bernstein_sum(spec.control_points, _check_t(t))


def de_casteljau(spec: BezierSpec, t: float) -> np.ndarray:
    t = _check_t(t)
    pts = spec.control_points.copy()
    while pts.shape[0] > 1:
        pts = (1.0 - t) * pts[:-1] + t * pts[1:]
    return pts[0]


def bezier_derivative(spec: BezierSpec, t: float) -> np.ndarray:
    """dB/dt = n * (degree n-1 curve over the control-point differences)."""
    t = _check_t(t)
    pts = spec.control_points
    n = pts.shape[0] - 1
    if n < 1:
        raise UsageError("degree-0 curve has no derivative")
    return n * _bernstein_sum(np.diff(pts, axis=0), t)


def _cross(o: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    return float((a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]))


def convex_hull_2d(points: np.ndarray) -> np.ndarray:
    """Andrew's monotone chain; counter-clockwise, no repeated endpoint."""
    pts = sorted(set(map(tuple, np.asarray(points, dtype=np.float64))))
    if len(pts) <= 2:
        return np.array(pts)
    arr = [np.array(p) for p in pts]
    lower: list[np.ndarray] = []
    for p in arr:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[np.ndarray] = []
    for p in reversed(arr):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def _segment_distance(q: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    ab = b - a
    denom = float(ab @ ab)
    s = 0.0 if denom == 0 else min(1.0, max(0.0, float((q - a) @ ab) / denom))
    return float(np.linalg.norm(q - (a + s * ab)))


def convex_hull_contains(points, q, tol: float = 1e-9) -> bool:
    """Is ``q`` inside the closed convex hull of ``points`` grown by ``tol``?"""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    q = np.asarray(q, dtype=np.float64)
    if points.shape[1] != 2 or q.shape != (2,):
        raise UnsupportedDimensionError("convex hull test is implemented for 2D points only")
    if points.shape[0] < 1:
        raise UsageError("need at least one point")
    hull = convex_hull_2d(points)
    if len(hull) == 1:
        return float(np.linalg.norm(q - hull[0])) <= tol
    if len(hull) == 2:
        return _segment_distance(q, hull[0], hull[1]) <= tol
    for a, b in zip(hull, np.roll(hull, -1, axis=0)):
        # signed distance of q to the left of edge a->b
        if _cross(a, b, q) / float(np.linalg.norm(b - a)) < -tol:
            return False
    return True
