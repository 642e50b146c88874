import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from liouville_lab import jets as jm
from liouville_lab.fields import Lattice, ScalarField2D, ScalarPeriodic1D, VectorField2D, smooth_step

import oracles as orc

coef = st.floats(-3, 3, allow_nan=False)
harmonics = st.lists(st.tuples(st.integers(1, 4), coef), max_size=3)


@given(c0=coef, cos=harmonics, sin=harmonics, period=st.floats(0.3, 3.0), t=st.floats(-5, 5))
@settings(max_examples=60, deadline=None)
def test_trig_polynomial_is_periodic(c0, cos, sin, period, t):
    f = ScalarPeriodic1D.from_harmonics(c0, cos, sin, period)
    scale = 1 + sum(abs(a) for _, a in cos + sin) + abs(c0)
    assert abs(f(t + period) - f(t)) <= 1e-12 * scale * (1 + abs(t))


@given(c0=coef, cos=harmonics, sin=harmonics, t=st.floats(-2, 2))
@settings(max_examples=40, deadline=None)
def test_trig_polynomial_derivatives_match_sympy(c0, cos, sin, t):
    f = ScalarPeriodic1D.from_harmonics(c0, cos, sin, 1.0)
    s = sp.Symbol("s")
    expr = sp.Float(c0) + sum(sp.Float(a) * sp.cos(2 * sp.pi * k * s) for k, a in cos) \
        + sum(sp.Float(a) * sp.sin(2 * sp.pi * k * s) for k, a in sin)
    v, d1, d2 = f.derivatives(np.array(t))
    for got, e in zip((v, d1, d2), (expr, sp.diff(expr, s), sp.diff(expr, s, 2))):
        ref = float(e.subs(s, t))
        assert got == pytest.approx(ref, abs=1e-9 * (1 + abs(ref)))


def test_derivative_object_matches_values():
    f = ScalarPeriodic1D(1.0, [0.5, 0.0, 0.2], [0.0, -0.3], period=2.0)
    t = np.linspace(-1, 3, 17)
    np.testing.assert_allclose(f.derivative(1)(t), f.d1(t), atol=1e-12)
    np.testing.assert_allclose(f.derivative(2)(t), f.d2(t), atol=1e-11)


def test_constant_detection_and_range():
    assert ScalarPeriodic1D.constant(2.0).is_constant()
    f = ScalarPeriodic1D(3.0, [1.0])
    lo, hi = f.range()
    assert lo == pytest.approx(2.0, abs=1e-12) and hi == pytest.approx(4.0, abs=1e-12)


def test_harmonic_index_must_be_positive_integer():
    with pytest.raises(ValueError):
        ScalarPeriodic1D.from_harmonics(0.0, [(0, 1.0)])
    with pytest.raises(ValueError):
        ScalarPeriodic1D(period=0.0)


def test_smooth_step_limits_and_flatness():
    t = np.array([-1.0, 0.0, 1.0, 2.0])
    v, d1, d2 = smooth_step.derivatives(t)
    np.testing.assert_array_equal(v, [0, 0, 1, 1])
    np.testing.assert_array_equal(d1, 0)
    np.testing.assert_array_equal(d2, 0)
    # symmetric: s(t) + s(1 - t) = 1
    u = np.linspace(0.01, 0.99, 50)
    np.testing.assert_allclose(smooth_step(u) + smooth_step(1 - u), 1.0, atol=1e-14)


def test_smooth_step_derivatives_against_finite_differences():
    t = np.linspace(0.05, 0.95, 37)
    h = 1e-6
    _, d1, d2 = smooth_step.derivatives(t)
    np.testing.assert_allclose(d1, (smooth_step(t + h) - smooth_step(t - h)) / (2 * h), atol=1e-7)
    h = 1e-4
    fd2 = (smooth_step(t + h) - 2 * smooth_step(t) + smooth_step(t - h)) / h ** 2
    np.testing.assert_allclose(d2, fd2, atol=1e-5, rtol=1e-6)


def test_jet_arithmetic_against_sympy():
    # composite of every jet primitive the package uses
    def f(X, Y):
        return jm.exp(X * Y) / (2.0 + jm.sin(X)) + jm.sqrt(3.0 + jm.cos(Y) * X) - jm.cbrt(X + 5.0) \
            + jm.log(2.0 + X * X) * Y ** 3
    e = sp.exp(orc.x * orc.y) / (2 + sp.sin(orc.x)) + sp.sqrt(3 + sp.cos(orc.y) * orc.x) \
        - sp.cbrt(orc.x + 5) + sp.log(2 + orc.x ** 2) * orc.y ** 3
    rng = np.random.default_rng(0)
    xs, ys = rng.uniform(-1, 1, 20), rng.uniform(-1, 1, 20)
    j = ScalarField2D(f).jet(xs, ys)
    refs = [e, sp.diff(e, orc.x), sp.diff(e, orc.y), sp.diff(e, orc.x, 2),
            sp.diff(e, orc.x, orc.y), sp.diff(e, orc.y, 2)]
    for got, ref in zip((j.v, j.x, j.y, j.xx, j.xy, j.yy), refs):
        np.testing.assert_allclose(got, orc.lambdify_xy(ref)(xs, ys), rtol=1e-12, atol=1e-12)


def test_analytic_and_finite_difference_partials_agree():
    X = ScalarPeriodic1D(3.0, [1.0, 0.2])
    Y = ScalarPeriodic1D(0.0, [], [1.0])
    f = X.of_x() * Y.of_y() + X.of_x() / (X.of_x() - Y.of_y())
    rng = np.random.default_rng(1)
    x, y = rng.random(100), rng.random(100)
    j = f.jet(x, y)
    fd = f.fd_jet(x, y)
    scale = np.maximum(1.0, np.abs(j.x) + np.abs(j.y))
    assert np.max(np.abs(fd.x - j.x) / scale) <= 10 * f.fd_step ** 2
    assert np.max(np.abs(fd.y - j.y) / scale) <= 10 * f.fd_step ** 2
    assert np.max(np.abs(fd.xx - j.xx)) < 1e-4
    assert np.max(np.abs(fd.xy - j.xy)) < 1e-4


def test_non_analytic_field_falls_back_to_differences():
    f = ScalarField2D(lambda x, y: np.sin(3 * x) * np.exp(y), analytic=False)
    j = f.jet(0.3, -0.2)
    assert j.x == pytest.approx(3 * np.cos(0.9) * np.exp(-0.2), rel=1e-8)
    assert j.yy == pytest.approx(np.sin(0.9) * np.exp(-0.2), rel=1e-5)


def test_vector_field_evaluation():
    v = VectorField2D.from_functions(ScalarField2D.coordinate_y(), 2.0)
    np.testing.assert_array_equal(v(np.array([1.0, 2.0]), np.array([3.0, 4.0])),
                                  [[3.0, 2.0], [4.0, 2.0]])


# keep the generators well conditioned; dependent ones are rejected by Lattice
lattice_st = st.tuples(st.floats(0.5, 2), st.floats(-0.5, 0.5),
                       st.floats(-0.5, 0.5), st.floats(0.5, 2)).filter(
    lambda L: L[0] * L[3] - L[1] * L[2] > 0.05)


@given(L=lattice_st, px=st.floats(-10, 10), py=st.floats(-10, 10),
       k=st.integers(-3, 3), m=st.integers(-3, 3))
@settings(max_examples=80, deadline=None)
def test_lattice_reduction_is_translation_invariant(L, px, py, k, m):
    lat = Lattice((L[0], L[1]), (L[2], L[3]))
    qx, qy = lat.translate(px, py, k, m)
    r1 = np.array(lat.reduce(px, py))
    r2 = np.array(lat.reduce(qx, qy))
    # points on the cell boundary may land on opposite edges
    d = r1 - r2
    coeff = np.linalg.solve(lat.matrix, d)
    assert np.allclose(coeff, np.round(coeff), atol=1e-9)
    cell = np.linalg.solve(lat.matrix, r1)
    assert np.all(cell >= -1e-12) and np.all(cell <= 1 + 1e-12)


def test_lattice_grid_and_degenerate_generators():
    lat = Lattice((2.0, 0.0), (0.0, 1.0))
    x, y = lat.grid(4)
    assert x.shape == (4, 4)
    assert 0 < x.min() and x.max() < 2 and 0 < y.min() and y.max() < 1
    with pytest.raises(ValueError):
        Lattice((1.0, 1.0), (2.0, 2.0))
