"""Acceptance suite: the eight end-to-end criteria at their stated tolerances.

The terminal summary (see conftest.py) prints one PASS/FAIL line per criterion.
"""
import math
import time

import numpy as np
import pytest
from scipy.special import dawsn

from seisradon.core import TransformParams
from seisradon.forward import transform_batch
from seisradon.inversion import InversionJob, invert, invert_p
from seisradon.phantoms import check_membership, gaussian, make_phantom
from seisradon.quadrature import QuadSpec, pv_integral
from seisradon.reduction import boundary_limit, limit_gaps, reduce, reduction_sides
from seisradon.xray import XrayData, default_xray_axes, xray_forward_grid, xray_invert_grid

GRID64 = (64, 64, -3.0, -3.0, 6.0 / 63, 6.0 / 63)
FAMILY = {"Q": "S", "P": "SP", "R": "SR"}
REDUCED = {"Q": "F", "P": "FP", "R": "FR"}
TIGHT = QuadSpec(rel_tol=1e-8)


def _rel_l2(grid, f):
    X, Y = grid.mesh()
    ex = f(X, Y)
    return float(np.linalg.norm(grid.values - ex) / np.linalg.norm(ex))


def _su_7x7():
    S, U = np.meshgrid(np.linspace(-2, 2, 7), np.linspace(-2, 2, 7))
    return S.ravel(), U.ravel()


# -- 1 -----------------------------------------------------------------------

@pytest.mark.criterion(1)
def test_xray_round_trip():
    f = gaussian()
    t0 = time.perf_counter()
    th, t = default_xray_axes(f, 64, 129)
    sino = xray_forward_grid(f, th, t, TIGHT)
    g = xray_invert_grid(XrayData(sino), GRID64, TIGHT)
    elapsed = time.perf_counter() - t0
    err = _rel_l2(g, f)
    print(f"X-ray round trip: relative L2 {err:.3e} in {elapsed:.1f} s")
    assert err < 1e-2
    assert elapsed < 300


# -- 2, 3 --------------------------------------------------------------------

IDENTITY_CASES = [
    ("Q", TransformParams(alpha=2, m=0)),
    ("Q", TransformParams(alpha=2, m=1)),
    ("Q", TransformParams(alpha=2.5, m=1)),
    ("P", TransformParams(alpha=2, m=0)),
    ("P", TransformParams(alpha=2, m=1)),
    ("P", TransformParams(alpha=2.5, m=1)),
    ("R", TransformParams(alpha=2, beta=2, m=0)),
    ("R", TransformParams(alpha=2, beta=2, m=1)),
]
CASE_IDS = [f"{k}-a{p.alpha}-m{p.m}" for k, p in IDENTITY_CASES]


@pytest.mark.criterion(2)
@pytest.mark.parametrize("kind, p", IDENTITY_CASES, ids=CASE_IDS)
def test_reduction_identity(kind, p):
    s, u = _su_7x7()
    chk = reduction_sides(make_phantom(FAMILY[kind], p), kind, s, u, TIGHT)
    assert chk.max_residual < 1e-6


@pytest.mark.criterion(3)
@pytest.mark.parametrize("kind, p", IDENTITY_CASES, ids=CASE_IDS)
def test_derivative_identity(kind, p):
    s, u = _su_7x7()
    chk = reduction_sides(make_phantom(FAMILY[kind], p), kind, s, u, TIGHT, derivative=True)
    assert chk.max_residual < 1e-5


# -- 4 -----------------------------------------------------------------------

P_INV = TransformParams(alpha=2, m=1)


@pytest.fixture(scope="module")
def inversion_errors():
    errs = {}
    for kind in ("Q", "P", "R"):
        f = make_phantom(FAMILY[kind], P_INV)
        for tol in (1e-6, 1e-8):
            g = invert(InversionJob(kind, P_INV, GRID64, field=f, spec=QuadSpec(rel_tol=tol)))
            errs[kind, tol] = (_rel_l2(g, f), bool(g.valid.all()))
    return errs


@pytest.mark.criterion(4)
@pytest.mark.parametrize("kind", ["Q", "P", "R"])
def test_inversion_round_trip(inversion_errors, kind):
    err, valid = inversion_errors[kind, 1e-8]
    print(f"{kind}: relative L2 {err:.3e}")
    assert valid
    assert err < 5e-2


@pytest.mark.criterion(4)
def test_inversion_error_decreases_with_tolerance(inversion_errors):
    drops = {k: inversion_errors[k, 1e-8][0] < inversion_errors[k, 1e-6][0] for k in "QPR"}
    print({k: (inversion_errors[k, 1e-6][0], inversion_errors[k, 1e-8][0]) for k in "QPR"})
    assert any(drops.values())


# -- 5 -----------------------------------------------------------------------

@pytest.fixture(scope="module")
def mixture():
    p = TransformParams(alpha=2, m=0)
    odd = make_phantom("S", p)                      # X exp(-X^2 - y^2)
    even = make_phantom("SP", p, amplitude=0.5, shift=0.3)
    return p, odd + even


@pytest.mark.criterion(5)
def test_p_annihilates_odd_part(mixture):
    p, mix = mixture
    rng = np.random.default_rng(5)
    s = rng.uniform(-2, 2, 25)
    u = rng.uniform(-2, 2, 25)
    v = transform_batch("P", mix.odd_part(), p, s, u, TIGHT)[0]
    assert np.max(np.abs(v)) < 1e-9


@pytest.mark.criterion(5)
def test_invert_p_returns_even_part(mixture):
    p, mix = mixture
    g = invert_p(InversionJob("P", p, GRID64, field=mix, spec=TIGHT))
    err = _rel_l2(g, mix.even_part())
    print(f"even-part reconstruction: relative L2 {err:.3e}")
    assert err < 5e-2


# -- 6 -----------------------------------------------------------------------

CRIT = TransformParams(alpha=2, m=0)


@pytest.mark.criterion(6)
@pytest.mark.parametrize("kind", ["Q", "P"])
@pytest.mark.parametrize("s, u", [(0.0, 0.0), (0.5, -0.7), (-1.3, 1.2)])
def test_limits_f_fp(kind, s, u):
    F = reduce(make_phantom(FAMILY[kind], CRIT), REDUCED[kind])
    assert F.critical
    for side, xi in (("+", 1e-6), ("-", -1e-6)):
        lim = boundary_limit(F, side, s, u)
        assert abs(float(F(xi, s * xi + u)) - lim) < 1e-3


@pytest.mark.criterion(6)
@pytest.mark.parametrize("u", [-1.0, 1.0])
@pytest.mark.parametrize("s", [0.0, 0.8])
def test_limits_fr(s, u):
    F = reduce(make_phantom("SR", CRIT), "FR")
    xi = 1e-6
    lim = boundary_limit(F, "+", s, u)
    assert abs(float(F(xi, s * xi + u)) - lim) < 1e-3


@pytest.mark.criterion(6)
@pytest.mark.parametrize("kind", ["Q", "P", "R"])
def test_noncritical_branch_tends_to_zero(kind):
    F = reduce(make_phantom(FAMILY[kind], TransformParams(alpha=2, m=1)), REDUCED[kind])
    assert not F.critical
    ks = np.arange(2, 9)
    gaps = limit_gaps(F, "+", 0.4, 0.9, exponents=ks)
    assert np.all(np.diff(gaps) < 0)
    # the gap vanishes like xi^((m + 2 - alpha)/alpha) = xi^(1/2) here
    slope = np.polyfit(-ks[-3:], np.log10(gaps[-3:]), 1)[0]
    assert abs(slope - 0.5) < 0.02


# -- 7 -----------------------------------------------------------------------

@pytest.mark.criterion(7)
def test_pv_dawson_oracle():
    ref = 2 * math.sqrt(math.pi) * dawsn(1.0)
    r = pv_integral(lambda u: np.exp(-u * u), 1.0, TIGHT, decay_radius=6.0)
    assert abs(r.value - ref) < 1e-8


@pytest.mark.criterion(7)
@pytest.mark.parametrize("pole", [0.0, 0.6, -1.7])
def test_pv_even_density(pole):
    g = lambda u: np.exp(-(u - pole) ** 2) * (1 + (u - pole) ** 2)
    r = pv_integral(g, pole, TIGHT, decay_radius=6.0 + abs(pole))
    assert abs(r.value) < 1e-10


# -- 8 -----------------------------------------------------------------------

@pytest.mark.criterion(8)
@pytest.mark.parametrize("family", ["S", "SP", "SR"])
@pytest.mark.parametrize("alpha, m", [(2.0, 0), (2.0, 1), (2.5, 1), (3.0, 1)])
def test_taylor_remainder(family, alpha, m):
    f = make_phantom(family, TransformParams(alpha=alpha, m=m))
    rep = check_membership(f, tol=1e-9, n_points=25)
    keys = [k for k in ("taylor", "mean_value", "taylor_mixed") if k in rep.residuals]
    assert all(rep.residuals[k] < 1e-9 for k in keys), rep.as_text()
