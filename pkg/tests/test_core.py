import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from seisradon.core import (Grid2, GridFormatError, ParameterError, Sinogram, TransformParams,
                            XraySinogram, grid_from_bytes, grid_io_roundtrip, grid_to_bytes,
                            parallel_map, read_grid, sinogram_from_bytes, sinogram_to_bytes,
                            thread_count, validate_params, write_grid, xray_from_bytes,
                            xray_to_bytes)


def _grid(nx=5, ny=4, seed=1):
    vals = np.random.default_rng(seed).normal(size=(ny, nx))
    return Grid2(nx, ny, -1.5, 0.25, 0.3, 0.7, vals)


@pytest.mark.parametrize("kw, violation", [
    (dict(alpha=1.0), "alpha_gt_1"),
    (dict(beta=0.5), "beta_gt_1"),
    (dict(m=-1), "m_nonnegative_integer"),
    (dict(m=1.5), "m_nonnegative_integer"),
    (dict(alpha=3.5, m=1), "m_ge_alpha_minus_2"),
    (dict(c=math.inf), "c_finite"),
])
def test_parameter_violations(kw, violation):
    with pytest.raises(ParameterError) as exc:
        validate_params(TransformParams(**kw))
    assert exc.value.violation == violation


def test_valid_parameters_pass_through():
    p = TransformParams(alpha=2.5, beta=3, c=0.2, m=1)
    assert validate_params(p) is p


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 40), st.integers(0, 40), st.floats(-10, 10), st.floats(-10, 10),
       st.floats(0.01, 3), st.floats(0.01, 3))
def test_coord_index_inverse(i, j, x0, y0, dx, dy):
    g = Grid2(41, 41, x0, y0, dx, dy, np.zeros((41, 41)))
    x, y = g.coord(i, j)
    assert g.index(x, y) == (i, j)


def test_value_layout_is_x_fastest():
    g = Grid2.from_function(lambda x, y: x + 10 * y, 3, 2, 0.0, 0.0, 1.0, 1.0)
    assert g.values.tolist() == [[0, 1, 2], [10, 11, 12]]
    assert grid_to_bytes(g).endswith(np.array([0, 1, 2, 10, 11, 12], "<f8").tobytes())


@pytest.mark.parametrize("fmt", ["f64le", "csv"])
def test_grid_roundtrip(fmt):
    g = _grid()
    back = grid_io_roundtrip(g, fmt)
    assert back.geometry == g.geometry
    assert np.array_equal(back.values, g.values)


def test_grid_file_roundtrip(tmp_path):
    g = _grid()
    write_grid(tmp_path / "a.grid", g, meta={"seed": "3"})
    back = read_grid(tmp_path / "a.grid")
    assert back == g
    assert back.meta["seed"] == "3"


def test_grid_is_immutable():
    g = _grid()
    with pytest.raises(ValueError):
        g.values[0, 0] = 1.0


@pytest.mark.parametrize("mutate", [
    lambda b: b[:-8],                                   # truncated payload
    lambda b: b.split(b"\n", 1)[0],                     # missing tag line
    lambda b: b.replace(b"f64le", b"f32be", 1),         # unknown payload tag
    lambda b: b"5 4 nan 0 1 1\n" + b.split(b"\n", 1)[1],  # non-finite geometry
    lambda b: b"5 4 0 0 -1 1\n" + b.split(b"\n", 1)[1],   # negative spacing
    lambda b: b"5 4.5 0 0 1 1\n" + b.split(b"\n", 1)[1],  # fractional size
])
def test_grid_format_errors(mutate):
    with pytest.raises(GridFormatError):
        grid_from_bytes(mutate(grid_to_bytes(_grid())))


def test_grid_rejects_nan_payload():
    raw = grid_to_bytes(_grid())
    head = raw[:-8 * 20]
    bad = head + np.full(20, np.nan, "<f8").tobytes()
    with pytest.raises(GridFormatError):
        grid_from_bytes(bad)


def test_grid_constructor_checks():
    with pytest.raises(GridFormatError):
        Grid2(1, 4, 0, 0, 1, 1, np.zeros((4, 1)))
    with pytest.raises(GridFormatError):
        Grid2(3, 3, 0, 0, 1, 1, np.zeros((2, 3)))


@pytest.mark.parametrize("fmt", ["f64le", "csv"])
def test_sinogram_roundtrip(fmt):
    p = TransformParams(alpha=2.5, beta=2, c=0.1, m=1)
    s = np.linspace(-1, 1, 3)
    u = np.linspace(-2, 2, 5)
    sino = Sinogram("Q", p, s, u, np.arange(15.0).reshape(3, 5), meta={"k": "v"})
    back = sinogram_from_bytes(sinogram_to_bytes(sino, fmt))
    assert back.kind == "Q" and back.params == p
    assert np.array_equal(back.s, s) and np.array_equal(back.u, u)
    assert np.array_equal(back.values, sino.values)


def test_xray_roundtrip_and_angle_check():
    th = np.array([0.3, 1.2])
    t = np.linspace(-1, 1, 4)
    sino = XraySinogram(th, t, np.ones((2, 4)))
    back = xray_from_bytes(xray_to_bytes(sino))
    assert np.array_equal(back.theta, th) and np.array_equal(back.values, sino.values)
    with pytest.raises(GridFormatError):
        XraySinogram(np.array([0.0, 1.0]), t, np.ones((2, 4)))


def test_parallel_map_keeps_order(monkeypatch):
    items = list(range(20))
    assert parallel_map(lambda v: v * v, items, threads=4) == [v * v for v in items]
    monkeypatch.setenv("SEISRADON_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.setenv("SEISRADON_THREADS", "many")
    with pytest.raises(ValueError):
        thread_count()
