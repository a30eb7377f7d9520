import math

import numpy as np
import pytest

from seisradon.core import TransformParams
from seisradon.forward import forward_grid, transform_batch
from seisradon.inversion import (HullError, InversionJob, SinogramDerivative, du_sinogram,
                                 invert, invert_p, invert_q, invert_r, required_u_hull)
from seisradon.phantoms import AnalyticField, make_phantom
from seisradon.quadrature import QuadSpec

P = TransformParams(alpha=2, m=1)
SMALL = (7, 7, -2.4, -2.4, 0.8, 0.8)
FAMILY = {"Q": "S", "P": "SP", "R": "SR"}
LOOSE = QuadSpec(rel_tol=1e-6)


def _rel(g, f):
    X, Y = g.mesh()
    ex = f(X, Y)
    return np.linalg.norm(g.values - ex) / np.linalg.norm(ex)


@pytest.fixture(scope="module")
def q_sinogram():
    f = make_phantom("S", P)
    s = np.linspace(-4, 4, 41)
    u = np.linspace(-12, 12, 481)  # spacing 0.05
    return f, forward_grid("Q", f, P, s, u)


def test_job_validation():
    f = make_phantom("S", P)
    with pytest.raises(ValueError):
        InversionJob("Z", P, SMALL, field=f)
    with pytest.raises(ValueError):
        InversionJob("Q", P, SMALL)
    with pytest.raises(ValueError):
        InversionJob("Q", P, SMALL, field=f, du_mode="spline")
    with pytest.raises(ValueError):
        InversionJob("Q", P, SMALL, field=f, s_mode="polar")
    with pytest.raises(ValueError):
        InversionJob("Q", P, (1, 7, 0, 0, 1, 1), field=f)


def test_data_mode_requires_matching_sinogram(q_sinogram):
    _, sino = q_sinogram
    with pytest.raises(ValueError):
        InversionJob("P", P, SMALL, sinogram=sino, du_mode="fd")
    with pytest.raises(ValueError):
        InversionJob("Q", P, SMALL, sinogram=sino, du_mode="exact")


def test_fd_derivative_of_sampled_data(q_sinogram):
    f, sino = q_sinogram
    for s, u in [(0.0, 1.0), (1.2, -0.5), (-2.0, 2.25)]:
        exact = du_sinogram(sino, s, u, mode="exact", f=f)
        assert abs(du_sinogram(sino, s, u) - exact) < 1e-5


def test_sinogram_derivative_hull(q_sinogram):
    _, sino = q_sinogram
    d = SinogramDerivative(sino)
    with pytest.raises(HullError):
        d(np.array([0.0]), np.array([11.99]))
    assert d(np.array([0.0]), np.array([11.99]), strict=False)[0] == 0.0


def test_undersized_sinogram_is_rejected(q_sinogram):
    _, sino = q_sinogram
    lo, hi = required_u_hull("Q", P, (64, 64, -3, -3, 6 / 63, 6 / 63), -4, 4)
    assert hi > 12
    job = InversionJob("Q", P, (64, 64, -3, -3, 6 / 63, 6 / 63), sinogram=sino, du_mode="fd")
    with pytest.raises(HullError):
        invert(job)


@pytest.mark.parametrize("kind", ["Q", "P", "R"])
def test_oracle_round_trip_small_grid(kind):
    f = make_phantom(FAMILY[kind], P)
    g = invert(InversionJob(kind, P, SMALL, field=f, spec=LOOSE))
    assert g.valid.all()
    assert _rel(g, f) < 1e-6


def test_round_trip_non_integer_alpha():
    p = TransformParams(alpha=2.5, m=1, c=0.3)
    f = make_phantom("S", p)
    g = invert(InversionJob("Q", p, SMALL, field=f, spec=LOOSE))
    assert _rel(g, f) < 1e-5


def test_fd_oracle_derivative_mode():
    f = make_phantom("SP", P)
    g = invert(InversionJob("P", P, SMALL, field=f, spec=LOOSE, du_mode="fd"))
    assert _rel(g, f) < 1e-4


def test_direct_mode_truncates_in_s():
    f = make_phantom("S", P)
    theta = invert(InversionJob("Q", P, SMALL, field=f, spec=LOOSE))
    direct = invert(InversionJob("Q", P, SMALL, field=f, spec=LOOSE, s_mode="direct", s_max=50))
    # the s-range truncation costs about 1/s_max relative to the full angular integral
    assert np.max(np.abs(direct.values - theta.values)) < 2e-2 * np.max(np.abs(theta.values))


def test_zero_field_gives_zero_grid():
    g = invert(InversionJob("R", P, SMALL, field=AnalyticField.zero(P)))
    assert not np.any(g.values)


def test_kind_specific_entry_points():
    f = make_phantom("S", P)
    job = InversionJob("Q", P, SMALL, field=f, spec=LOOSE)
    with pytest.raises(ValueError):
        invert_p(job)
    assert invert_q(job).geometry == SMALL[:2] + SMALL[2:]
    with pytest.raises(ValueError):
        invert_r(InversionJob("R", P, SMALL, field=make_phantom("SP", P)))


def test_data_mode_round_trip(q_sinogram):
    f, sino = q_sinogram
    geo = (5, 5, -1.0, -1.0, 0.5, 0.5)
    g = invert(InversionJob("Q", P, geo, sinogram=sino, du_mode="fd", spec=LOOSE))
    X, Y = g.mesh()
    # data only covers |s| <= 4, so the angular integral is truncated
    assert np.max(np.abs(g.values - f(X, Y))) < 0.1


def test_theta_and_direct_modes_agree_with_wide_s_range():
    f = make_phantom("S", P)
    geo = (16, 16, -3.0, -3.0, 0.4, 0.4)
    theta = invert(InversionJob("Q", P, geo, field=f, spec=LOOSE))
    direct = invert(InversionJob("Q", P, geo, field=f, spec=LOOSE, s_mode="direct", s_max=1000))
    diff = np.linalg.norm(direct.values - theta.values) / np.linalg.norm(theta.values)
    assert diff < 1e-3


def test_p_oracle_accepts_asymmetric_field_and_returns_even_part():
    p = TransformParams(alpha=2, m=0)
    mix = make_phantom("S", p) + make_phantom("SP", p, amplitude=0.5, shift=0.3)
    g = invert_p(InversionJob("P", p, SMALL, field=mix, spec=LOOSE))
    assert _rel(g, mix.even_part()) < 1e-6
