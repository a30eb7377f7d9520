import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from seisradon.core import ParameterError, TransformParams
from seisradon.phantoms import check_membership, gaussian, make_phantom

CONFIGS = [(2.0, 0), (2.0, 1), (2.5, 1), (3.0, 1)]


def test_reference_value():
    f = make_phantom("S", TransformParams(alpha=2, m=1))
    assert abs(float(f(1.0, 0.0)) - math.exp(-1)) < 1e-15
    assert float(f(0.0, 0.7)) == 0.0


def test_zero_amplitude_gives_zero_field():
    f = make_phantom("SP", TransformParams(m=1), amplitude=0.0)
    X, Y = np.meshgrid(np.linspace(-3, 3, 9), np.linspace(-3, 3, 9))
    assert not np.any(f(X, Y))


def test_parameter_errors_name_the_invariant():
    with pytest.raises(ParameterError) as exc:
        make_phantom("S", TransformParams(m=-1))
    assert exc.value.violation == "m_nonnegative_integer"
    with pytest.raises(ValueError):
        make_phantom("T", TransformParams())
    with pytest.raises(ValueError):
        make_phantom("SR", TransformParams(), shift=0.5)
    with pytest.raises(ValueError):
        make_phantom("S", TransformParams(), space="SP")


@pytest.mark.parametrize("family", ["S", "SP", "SR"])
@pytest.mark.parametrize("alpha, m", CONFIGS)
def test_builtin_families_pass_membership(family, alpha, m):
    rep = check_membership(make_phantom(family, TransformParams(alpha=alpha, m=m)))
    assert rep.passed, rep.as_text()
    assert rep.residuals["taylor"] < 1e-9
    for key in ("even_x", "even_y", "zero_on_x_axis"):
        if key in rep.residuals:
            assert rep.residuals[key] == 0.0


def test_gaussian_is_rejected():
    rep = check_membership(gaussian())
    assert not rep.passed
    assert "vanishing_exact" in rep.failures


@settings(max_examples=30, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.integers(0, 3), st.integers(0, 2))
def test_exact_derivatives_match_differences(x, y, kx, ky):
    f = make_phantom("SR", TransformParams(alpha=3, m=1), shift=0.0, width=1.3)
    h = 1e-5
    if kx:
        fd = (f.partial(kx - 1, ky, x + h, y) - f.partial(kx - 1, ky, x - h, y)) / (2 * h)
        exact = f.partial(kx, ky, x, y)
    else:
        fd = (f.partial(0, ky - 1, x, y + h) - f.partial(0, ky - 1, x, y - h)) / (2 * h) if ky else f(x, y)
        exact = f.partial(0, ky, x, y)
    assert abs(fd - exact) < 1e-6


def test_even_and_odd_parts():
    p = TransformParams(alpha=2, m=0)
    mix = make_phantom("S", p) + make_phantom("SP", p, amplitude=0.5, shift=0.3)
    X, Y = np.meshgrid(np.linspace(-3, 3, 13), np.linspace(-3, 3, 13))
    even, odd = mix.even_part(), mix.odd_part()
    assert np.allclose(even(X, Y) + odd(X, Y), mix(X, Y), atol=1e-15)
    assert np.allclose(even(X, Y), even(-X, Y), atol=1e-16)
    assert np.allclose(odd(X, Y), -odd(-X, Y), atol=1e-16)
    assert np.max(np.abs(odd(X, Y))) > 0.1
    assert even.space_tag == "SP"


def test_windows_cover_the_support():
    f = make_phantom("S", TransformParams(alpha=2, m=1))
    lo, hi = f.y_window
    assert float(abs(f(1.0, hi))) < 1e-13
    assert f.decay_radius >= max(abs(lo), abs(hi))
