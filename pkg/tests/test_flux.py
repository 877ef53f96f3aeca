import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from viscolab import (FourierSeries, burgers_flux, make_flux, make_homogeneous_flux,
                      make_linear_flux, make_polynomial_flux, make_separable_convex_flux,
                      probe_growth_hypotheses)
from viscolab.flux import BlendedSlopes

from conftest import COS_HALF


def test_linear_constant_coefficient():
    flux = make_linear_flux(2.0)
    assert flux.eval(0.3, 5.0) == pytest.approx(10.0)


def test_linear_derivatives(linear_cos):
    assert linear_cos.d_u(0.25, np.array([-3.0, 0.0, 7.0])) == pytest.approx(1.0)
    assert linear_cos.d_y(0.0, 3.0) == pytest.approx(0.0, abs=1e-12)
    assert linear_cos.d_y(0.25, 3.0) == pytest.approx(-3 * np.pi, rel=1e-12)
    # cross-check against differences of eval
    h = 1e-6
    fd = (linear_cos.eval(0.25 + h, 3.0) - linear_cos.eval(0.25 - h, 3.0)) / (2 * h)
    assert fd == pytest.approx(-9.42478, abs=1e-5)


def test_separable_linear_branches():
    flux = make_separable_convex_flux(0.0, 1.0, 1.0, 1.0)
    assert flux.eval(0.7, 3.0) == pytest.approx(3.0)
    flux = make_separable_convex_flux(FourierSeries(((1, 0.0, 1.0),)), 1.0, 1.0, 1.0)
    assert flux.eval(0.25, 3.0) == pytest.approx(4.0)
    flux = make_separable_convex_flux(0.0, 1.5, 2.0, 1.0)
    assert flux.d_u(np.linspace(0, 1, 5), -5.0) == pytest.approx(-1.5)


def test_separable_rejects_bad_slopes():
    with pytest.raises(ValueError):
        make_separable_convex_flux(0.0, -1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        make_separable_convex_flux(0.0, 1.0, 1.0, 0.0)


def test_blend_is_c2_and_convex():
    f = BlendedSlopes(1.0, 2.0, 1.0)
    v = np.linspace(-3, 3, 6001)
    d = f.derivative(v)
    assert np.all(np.diff(d) >= -1e-14)
    # derivative of f matches differences of f
    h = 1e-6
    assert np.max(np.abs((f(v + h) - f(v - h)) / (2 * h) - d)) < 1e-8
    # second derivative is continuous at the thresholds
    assert f.second_derivative(np.array([-1.0, 1.0])) == pytest.approx([0.0, 0.0])
    s = f.argmin
    assert abs(f.derivative(s)) < 1e-12


def test_burgers():
    flux = burgers_flux()
    assert flux.eval(0.7, 2.0) == pytest.approx(2.0)
    assert flux.d_u(0.1, 3.0) == pytest.approx(3.0)
    assert flux.d_y(0.1, 4.0) == 0.0


def test_polynomial_matches_explicit():
    flux = make_polynomial_flux([0.0, COS_HALF, 0.5])
    y, u = np.meshgrid(np.linspace(0, 1, 7), np.linspace(-2, 2, 9))
    assert np.allclose(flux.eval(y, u), COS_HALF(y) * u + 0.5 * u * u)
    assert np.allclose(flux.d_u(y, u), COS_HALF(y) + u)
    assert np.allclose(flux.d_y(y, u), -np.pi * np.sin(2 * np.pi * y) * u)
    assert flux.convex_in_u and not flux.homogeneous_in_y
    assert make_polynomial_flux([0.0, 0.0, 0.5]).homogeneous_in_y


def test_fd_fallback_derivatives():
    flux = make_flux(lambda y, u: np.sin(2 * np.pi * y) * u ** 3)
    assert flux.d_u(0.25, 2.0) == pytest.approx(12.0, rel=1e-8)
    assert flux.d_y(0.0, 2.0) == pytest.approx(16 * np.pi, rel=1e-8)


@settings(max_examples=50, deadline=None)
@given(y=st.floats(0, 1), u=st.floats(-10, 10))
def test_eo_split_sums_and_monotone(y, u):
    for flux in (make_separable_convex_flux(COS_HALF, 1.0, 2.0, 1.0), burgers_flux(),
                 make_linear_flux(COS_HALF), make_flux(lambda y, u: (1 + 0.3 * np.sin(2 * np.pi * y)) * u ** 3 / 3)):
        plus, minus = flux.eo_split(y, u)
        assert plus + minus == pytest.approx(float(flux.eval(y, u)), abs=1e-9 * (1 + abs(u) ** 3))
        p2, m2 = flux.eo_split(y, u + 0.1)
        assert p2 >= plus - 1e-12 and m2 <= minus + 1e-12


def test_interface_ops_match_split(separable):
    y = np.linspace(0, 1, 11)
    u = np.linspace(-3, 3, 11)
    ops = separable.interface_ops(y)
    plus, minus = separable.eo_split(y, u)
    assert np.allclose(ops.plus(u), plus) and np.allclose(ops.minus(u), minus)


def test_homogeneous_flux_fd_derivative():
    flux = make_homogeneous_flux(np.exp)
    assert flux.d_u(0.3, 1.0) == pytest.approx(np.e, rel=1e-8)
    assert flux.homogeneous_in_y


def test_growth_probe():
    rep = probe_growth_hypotheses(make_linear_flux(1.0), ((0, 1), (-5, 5)), 21, m=0.0)
    assert rep.sup_du_ratio == pytest.approx(1.0)
    rep = probe_growth_hypotheses(burgers_flux(), ((0, 1), (-50, 50)), 41, m=1.0)
    assert rep.sup_du_ratio < 1.0
    V = FourierSeries(((1, 0.0, 0.25),))
    rep = probe_growth_hypotheses(make_separable_convex_flux(V, 1.0, 2.0, 1.0),
                                  ((0, 1), (-3, 3)), 201, n=0.0)
    # dense sampling oracle for sup |V'|
    ys = np.linspace(0, 1, 201)
    assert rep.sup_dy_ratio == pytest.approx(np.max(np.abs(0.5 * np.pi * np.cos(2 * np.pi * ys))))
    with pytest.raises(ValueError):
        probe_growth_hypotheses(burgers_flux(), ((0, 1), (0, 1)), 1)
