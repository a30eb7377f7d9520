import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from seisradon.core import TransformParams
from seisradon.phantoms import make_phantom
from seisradon.reduction import (boundary_limit, decay_witness, limit_gaps, recover, reduce,
                                 reduction_sides)

FAMILY = {"F": "S", "FP": "SP", "FR": "SR"}
KIND = {"F": "Q", "FP": "P", "FR": "R"}


def _reduced(kind, alpha=2.0, m=1, beta=2.0, c=0.0):
    p = TransformParams(alpha=alpha, beta=beta, c=c, m=m)
    return reduce(make_phantom(FAMILY[kind], p), kind)


def test_closed_form_value():
    F = _reduced("F")
    assert abs(float(F(1.0, 0.0)) - math.exp(-1) / 2) < 1e-16


@pytest.mark.parametrize("kind", ["F", "FP", "FR"])
@pytest.mark.parametrize("alpha, beta", [(2.0, 2.0), (2.5, 2.0), (3.0, 3.0)])
def test_recover_inverts_reduce(kind, alpha, beta):
    F = _reduced(kind, alpha=alpha, beta=beta, c=0.4)
    X, Y = np.meshgrid(np.linspace(-2.6, 3.4, 25), np.linspace(-3, 3, 24))
    assert np.allclose(recover(F, X, Y), F.source(X, Y), atol=1e-14, rtol=1e-13)


def test_piecewise_zero_regions():
    FP = _reduced("FP")
    FR = _reduced("FR")
    assert float(FP(-0.5, 0.3)) == 0.0
    assert float(FR(-0.5, 0.3)) == 0.0
    assert float(FR(0.5, -0.3)) == 0.0
    assert float(FR(0.5, 0.0)) == 0.0


def test_wrong_space_is_rejected():
    with pytest.raises(ValueError):
        reduce(make_phantom("S", TransformParams(m=1)), "FR")
    with pytest.raises(ValueError):
        reduce(make_phantom("S", TransformParams(m=1)), "XX")


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(["F", "FP", "FR"]), st.floats(0.1, 3.0), st.floats(0.1, 2.0),
       st.booleans())
def test_gradient_matches_differences(kind, xi, eta, flip):
    F = _reduced(kind, alpha=2.5)
    xi = -xi if flip and kind == "F" else xi
    h = 1e-6
    gx, gy = F.gradient(xi, eta)
    fdx = (F(xi + h, eta) - F(xi - h, eta)) / (2 * h)
    fdy = (F(xi, eta + h) - F(xi, eta - h)) / (2 * h)
    assert abs(gx - fdx) < 1e-6 and abs(gy - fdy) < 1e-6


@pytest.mark.parametrize("kind", ["F", "FP", "FR"])
def test_noncritical_limit_is_zero(kind):
    F = _reduced(kind, alpha=2.0, m=1)
    assert boundary_limit(F, "+", 0.3, 0.5) == 0.0
    assert np.all(np.diff(limit_gaps(F, "+", 0.3, 0.5)) < 0)


@pytest.mark.parametrize("kind, side", [("F", "+"), ("F", "-"), ("FP", "+"), ("FR", "+")])
def test_critical_limits_alpha_3(kind, side):
    # m = alpha - 2 = 1: the FR limit is nonzero and carries the factor 2 of FR's definition
    F = _reduced(kind, alpha=3.0, m=1, beta=2.0)
    lim = boundary_limit(F, side, 0.4, 0.8)
    assert abs(lim) > 0.05
    xi = 1e-9 if side == "+" else -1e-9
    assert abs(float(F(xi, 0.4 * xi + 0.8)) - lim) < 1e-3 * abs(lim)


def test_critical_fr_limit_is_not_half():
    F = _reduced("FR", alpha=3.0, m=1)
    lim = boundary_limit(F, "+", 0.0, 1.0)
    val = float(F(1e-12, 1.0))
    assert abs(val - lim) < 1e-3 * lim
    assert abs(val - lim / 2) > 0.4 * lim


@pytest.mark.parametrize("kind", ["F", "FP", "FR"])
def test_decay_witness(kind):
    w = decay_witness(_reduced(kind))
    assert w.growth_free and math.isfinite(w.bound)


@pytest.mark.parametrize("kind", ["F", "FP", "FR"])
@pytest.mark.parametrize("derivative", [False, True])
def test_reduction_identity_spot_check(kind, derivative):
    F = _reduced(kind, alpha=2.5, m=1)
    s = np.array([-1.5, 0.0, 0.8])
    u = np.array([0.4, -0.7, 1.3])
    chk = reduction_sides(F.source, KIND[kind], s, u, derivative=derivative)
    assert chk.max_residual < (1e-5 if derivative else 1e-8)
