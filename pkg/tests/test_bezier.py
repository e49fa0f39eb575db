import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from bezdistill.bezier import (BezierSpec, bernstein_eval, bezier_derivative, convex_hull_contains, de_casteljau)
from bezdistill.errors import DomainError, UnsupportedDimensionError, UsageError

QUAD = BezierSpec(np.array([[0.0, 0.0], [1.0, 2.0], [2.0, 0.0]]))
TRI = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])

control_points = st.integers(1, 5).flatmap(
    lambda n: arrays(np.float64, (n + 1, 2), elements=st.floats(-10, 10)))


def test_endpoints():
    assert np.array_equal(bernstein_eval(QUAD, 0.0), [0, 0])
    assert np.array_equal(bernstein_eval(QUAD, 1.0), [2, 0])
    assert np.array_equal(de_casteljau(QUAD, 0.0), [0, 0])


def test_quadratic_values():
    np.testing.assert_allclose(bernstein_eval(QUAD, 0.5), [1.0, 1.0], atol=1e-15)
    # de Casteljau by hand at t = 1/4: (1/4, 1/2), (5/4, 3/2) -> (1/2, 3/4)
    np.testing.assert_allclose(bernstein_eval(QUAD, 0.25), [0.5, 0.75], atol=1e-15)
    np.testing.assert_allclose(de_casteljau(QUAD, 0.25), [0.5, 0.75], atol=1e-15)


@pytest.mark.parametrize("degree", [1, 3, 7])
def test_constant_curve(degree):
    spec = BezierSpec(np.tile([[1.5, -2.0]], (degree + 1, 1)))
    for t in np.linspace(0, 1, 11):
        np.testing.assert_allclose(de_casteljau(spec, t), [1.5, -2.0], atol=1e-14)


def test_derivatives():
    np.testing.assert_allclose(bezier_derivative(QUAD, 0.0), 2 * np.array([1.0, 2.0]))
    np.testing.assert_allclose(bezier_derivative(QUAD, 0.5), [2.0, 0.0], atol=1e-15)
    cubic = BezierSpec(np.array([[0.0, 0.0], [1.0, 3.0], [2.0, -1.0], [4.0, 1.0]]))
    d1 = bezier_derivative(cubic, 1.0)
    np.testing.assert_allclose(d1, 3 * (cubic.control_points[3] - cubic.control_points[2]))
    h = 1e-6
    # second-order one-sided difference at the right endpoint
    fd = (3 * bernstein_eval(cubic, 1.0) - 4 * bernstein_eval(cubic, 1 - h) + bernstein_eval(cubic, 1 - 2 * h)) / (2 * h)
    assert np.linalg.norm(d1 - fd) / np.linalg.norm(d1) <= 1e-6


def test_domain_and_usage_errors():
    with pytest.raises(DomainError):
        bernstein_eval(QUAD, 1.2)
    with pytest.raises(DomainError):
        de_casteljau(QUAD, -0.1)
    with pytest.raises(UsageError):
        BezierSpec(np.array([[0.0, 0.0]]))
    with pytest.raises(UsageError):
        BezierSpec(np.zeros((22, 2)))


def test_hull_examples():
    assert convex_hull_contains(TRI, [0.2, 0.2])
    assert convex_hull_contains(TRI, [1.0, 0.0])
    assert not convex_hull_contains(TRI, [1.0, 1.0], tol=1e-9)
    assert convex_hull_contains([[0.0, 0.0], [2.0, 2.0]], [1.0, 1.0])
    assert not convex_hull_contains([[0.0, 0.0], [2.0, 2.0]], [1.0, 1.1])
    assert convex_hull_contains([[1.0, 1.0]], [1.0, 1.0])
    with pytest.raises(UnsupportedDimensionError):
        convex_hull_contains(np.zeros((3, 3)), np.zeros(3))


@given(control_points, st.floats(0, 1))
def test_evaluators_agree(pts, t):
    spec = BezierSpec(pts)
    assert np.max(np.abs(bernstein_eval(spec, t) - de_casteljau(spec, t))) <= 1e-9


@given(control_points)
def test_endpoint_interpolation(pts):
    spec = BezierSpec(pts)
    assert np.linalg.norm(bernstein_eval(spec, 0.0) - pts[0]) <= 1e-12
    assert np.linalg.norm(bernstein_eval(spec, 1.0) - pts[-1]) <= 1e-12


@given(control_points, st.floats(0, 1))
def test_curve_in_hull(pts, t):
    assert convex_hull_contains(pts, de_casteljau(BezierSpec(pts), t), tol=1e-9)


@given(arrays(np.float64, (2, 2), elements=st.floats(-10, 10)), st.floats(0, 1))
def test_degree_one_is_lerp(pts, t):
    np.testing.assert_array_equal(bernstein_eval(BezierSpec(pts), t), (1 - t) * pts[0] + t * pts[1])
