import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import dawsn

from seisradon.quadrature import (GAUSS_WEIGHTS, KRONROD_WEIGHTS, NODES, QuadSpec, build_panels,
                                  integrate_line, integrate_many, integrate_real_line,
                                  integrate_vector, pv_integral)

# pv of exp(-u^2)/(1-u) over the real line equals 2 sqrt(pi) D(1), D the Dawson integral
DAWSON_PV = 1.907442188241755


def test_gk21_nodes_and_weights():
    assert NODES.size == 21 and np.all(np.diff(NODES) > 0)
    assert np.allclose(NODES, -NODES[::-1], atol=0)
    gx, gw = np.polynomial.legendre.leggauss(10)
    assert np.allclose(NODES[1::2], gx, atol=1e-15)
    assert np.allclose(GAUSS_WEIGHTS[1::2], gw, atol=1e-15)
    assert np.all(GAUSS_WEIGHTS[0::2] == 0)


@pytest.mark.parametrize("k", range(0, 32))
def test_kronrod_exact_to_degree_31(k):
    exact = 0.0 if k % 2 else 2.0 / (k + 1)
    assert abs(np.dot(KRONROD_WEIGHTS, NODES ** k) - exact) < 1e-14


def test_gauss_exact_to_degree_19():
    for k in range(20):
        exact = 0.0 if k % 2 else 2.0 / (k + 1)
        assert abs(np.dot(GAUSS_WEIGHTS, NODES ** k) - exact) < 1e-14


def test_quadspec_validation():
    with pytest.raises(ValueError):
        QuadSpec(rel_tol=0)
    with pytest.raises(ValueError):
        QuadSpec(max_depth=0)
    with pytest.raises(ValueError):
        QuadSpec(truncation_radius="wide")
    with pytest.raises(ValueError):
        QuadSpec(truncation_radius=-1.0)
    assert QuadSpec().radius(3.0) == 5.0
    assert QuadSpec(truncation_radius=7.0).radius(3.0) == 7.0
    with pytest.raises(ValueError):
        QuadSpec().radius()


def test_gaussian_integral():
    r = integrate_real_line(lambda u: np.exp(-u * u), decay_radius=6.0)
    assert r.converged
    assert abs(r.value - math.sqrt(math.pi)) < 1e-14
    assert r.truncation < 1e-12


def test_integrate_line_breakpoints():
    r = integrate_line(np.abs, -1.0, 2.0, points=[0.0])
    assert abs(r.value - 2.5) < 1e-15


def test_integrate_many_independent():
    a = np.zeros(3)
    b = np.array([1.0, 2.0, 3.0])
    v, e, ok = integrate_many(lambda idx, x: x ** 2, a, b)
    assert ok.all()
    assert np.allclose(v, b ** 3 / 3, rtol=1e-14)


def test_integrate_vector_shared_abscissae():
    v, _, ok = integrate_vector(lambda x: np.stack([np.sin(x), np.cos(x)], axis=1), 0.0, math.pi)
    assert ok
    assert np.allclose(v, [2.0, 0.0], atol=1e-13)


def test_dawson_oracle():
    assert abs(2 * math.sqrt(math.pi) * dawsn(1.0) - DAWSON_PV) < 1e-15
    r = pv_integral(lambda u: np.exp(-u * u), 1.0, decay_radius=6.0)
    assert r.converged
    assert abs(r.value - DAWSON_PV) < 1e-8


def test_pv_matches_excluded_neighbourhood_limit():
    # independent oracle: symmetric exclusion of (p - eps, p + eps); the excluded
    # result differs from the pv by c1 eps + c3 eps^3, so one Richardson step suffices
    g = lambda u: np.exp(-(u - 0.3) ** 2) * (1 + u)
    p = 0.7
    spec = QuadSpec(rel_tol=1e-13, abs_tol=1e-15)

    def excluded(eps):
        k = lambda u: g(u) / (p - u)
        return (integrate_line(k, -8.0, p - eps, spec).value
                + integrate_line(k, p + eps, 8.0, spec).value)

    e = 1e-3
    ref = 2 * excluded(e / 2) - excluded(e)
    assert abs(pv_integral(g, p, decay_radius=6.0).value - ref) < 1e-8


def test_pv_even_density_about_pole_vanishes():
    r = pv_integral(lambda u: np.exp(-(u - 0.4) ** 2), 0.4, decay_radius=6.0)
    assert abs(r.value) < 1e-10


def test_pv_rejects_bad_pole():
    with pytest.raises(ValueError):
        pv_integral(lambda u: np.exp(-u * u), math.nan, decay_radius=6.0)


@settings(max_examples=25, deadline=None)
@given(st.floats(-2.0, 2.0), st.floats(-3.0, 3.0), st.floats(-3.0, 3.0))
def test_pv_linear_in_density(p, a, b):
    g1 = lambda u: np.exp(-u * u)
    g2 = lambda u: u * np.exp(-u * u)
    lhs = pv_integral(lambda u: a * g1(u) + b * g2(u), p, decay_radius=6.0).value
    rhs = (a * pv_integral(g1, p, decay_radius=6.0).value
           + b * pv_integral(g2, p, decay_radius=6.0).value)
    assert abs(lhs - rhs) < 1e-8 * (1 + abs(a) + abs(b))


def test_panels_hilbert_many_poles():
    pan = build_panels(lambda u: np.exp(-u * u), -8.0, 8.0, QuadSpec(rel_tol=1e-12))
    assert abs(pan.integral() - math.sqrt(math.pi)) < 1e-12
    poles = np.array([-1.3, 0.0, 0.25, 1.0])
    ref = 2 * math.sqrt(math.pi) * dawsn(poles)
    assert np.allclose(pan.hilbert(poles), ref, atol=1e-10)
