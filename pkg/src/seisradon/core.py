"""Shared types, parameter validation and the grid/sinogram file format.

File layout
-----------
Every file starts with a plain-text header followed by a payload::

    nx ny x0 y0 dx dy          # grids
    f64le seed=7               # payload tag, then optional key=value pairs
    <payload>

Sinogram files use ``SINOGRAM kind alpha beta c m ns nu`` and X-ray
sinograms ``XRAY ntheta nt`` as the first line; both then carry the tag line
and one text line per sample axis before the payload.  The ``f64le`` payload
is raw little-endian doubles in row-major order (x fastest for grids, u or t
fastest for sinograms); ``csv`` writes one row per line with ``%.17g``.
"""
from __future__ import annotations

import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Tuple, Union

import numpy as np

__all__ = [
    "GridFormatError",
    "ParameterError",
    "TransformParams",
    "Grid2",
    "Sinogram",
    "XraySinogram",
    "validate_params",
    "grid_io_roundtrip",
    "read_grid",
    "write_grid",
    "read_sinogram",
    "write_sinogram",
    "read_xray",
    "write_xray",
    "parallel_map",
]

KINDS = ("P", "Q", "R")
FORMATS = ("f64le", "csv")


class ParameterError(ValueError):
    """Invalid transform parameters; ``violation`` names the broken rule."""

    def __init__(self, violation: str, message: str):
        super().__init__(message)
        self.violation = violation


class GridFormatError(ValueError):
    """Malformed, truncated or non-finite grid/sinogram file."""


@dataclass(frozen=True)
class TransformParams:
    """Exponents ``alpha``, ``beta``, axis offset ``c`` and vanishing order ``m``."""

    alpha: float = 2.0
    beta: float = 2.0
    c: float = 0.0
    m: int = 0


def validate_params(p: TransformParams) -> TransformParams:
    """Return ``p`` unchanged if it is admissible, else raise :class:`ParameterError`.

    The rule ``m >= alpha - 2`` is a real comparison, so ``m=1, alpha=2.5``
    is accepted.
    """
    for name in ("alpha", "beta", "c"):
        v = getattr(p, name)
        if not isinstance(v, (int, float, np.integer, np.floating)) or not math.isfinite(v):
            raise ParameterError(f"{name}_finite", f"{name} must be a finite real, got {v!r}")
    if not p.alpha > 1:
        raise ParameterError("alpha_gt_1", f"alpha must exceed 1, got {p.alpha}")
    if not p.beta > 1:
        raise ParameterError("beta_gt_1", f"beta must exceed 1, got {p.beta}")
    m = p.m
    if isinstance(m, (bool, np.bool_)) or not isinstance(m, (int, np.integer)) or m < 0:
        raise ParameterError("m_nonnegative_integer", f"m must be a nonnegative integer, got {m!r}")
    if m < p.alpha - 2:
        raise ParameterError("m_ge_alpha_minus_2",
                             f"vanishing order m={m} is below alpha-2={p.alpha - 2:g}")
    return p


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Grid2:
    """Uniform samples of a scalar field.

    ``values[j, i]`` is the sample at ``(x0 + i*dx, y0 + j*dy)``, so a flat
    C-order dump is x-fastest.  ``valid`` optionally flags samples whose
    computation succeeded.
    """

    nx: int
    ny: int
    x0: float
    y0: float
    dx: float
    dy: float
    values: np.ndarray
    valid: Optional[np.ndarray] = None
    meta: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny or self.nx < 2 or self.ny < 2:
            raise GridFormatError(f"grid needs nx, ny >= 2, got {self.nx}x{self.ny}")
        if not (self.dx > 0 and self.dy > 0):
            raise GridFormatError(f"grid spacings must be positive, got dx={self.dx}, dy={self.dy}")
        if not all(math.isfinite(v) for v in (self.x0, self.y0, self.dx, self.dy)):
            raise GridFormatError("grid geometry must be finite")
        vals = _frozen(self.values)
        if vals.shape != (self.ny, self.nx):
            raise GridFormatError(f"values shape {vals.shape} does not match ny x nx = "
                                  f"({self.ny}, {self.nx})")
        if not np.all(np.isfinite(vals)):
            raise GridFormatError("grid values must be finite")
        object.__setattr__(self, "values", vals)
        if self.valid is not None:
            mask = np.array(self.valid, dtype=bool)
            mask.setflags(write=False)
            if mask.shape != vals.shape:
                raise GridFormatError("validity mask shape mismatch")
            object.__setattr__(self, "valid", mask)

    @classmethod
    def from_function(cls, fn: Callable, nx, ny, x0, y0, dx, dy, **kw) -> "Grid2":
        x = x0 + dx * np.arange(nx)
        y = y0 + dy * np.arange(ny)
        X, Y = np.meshgrid(x, y)
        return cls(nx, ny, x0, y0, dx, dy, np.asarray(fn(X, Y), dtype=float), **kw)

    @property
    def geometry(self) -> Tuple[int, int, float, float, float, float]:
        return (self.nx, self.ny, self.x0, self.y0, self.dx, self.dy)

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.nx)

    @property
    def y(self) -> np.ndarray:
        return self.y0 + self.dy * np.arange(self.ny)

    def mesh(self):
        return np.meshgrid(self.x, self.y)

    def coord(self, i, j):
        """Coordinates of sample ``(i, j)`` (column i, row j)."""
        return self.x0 + self.dx * np.asarray(i), self.y0 + self.dy * np.asarray(j)

    def index(self, x, y):
        """Nearest sample indices of ``(x, y)``; inverse of :meth:`coord`."""
        i = np.rint((np.asarray(x) - self.x0) / self.dx).astype(int)
        j = np.rint((np.asarray(y) - self.y0) / self.dy).astype(int)
        return i, j

    def with_values(self, values, valid=None) -> "Grid2":
        return Grid2(self.nx, self.ny, self.x0, self.y0, self.dx, self.dy, values,
                     valid=valid, meta=dict(self.meta))

    def same_geometry(self, other: "Grid2") -> bool:
        return self.geometry == other.geometry

    def __eq__(self, other):
        if not isinstance(other, Grid2):
            return NotImplemented
        return self.same_geometry(other) and np.array_equal(self.values, other.values)


def _check_axis(name, a):
    a = _frozen(a)
    if a.ndim != 1 or a.size < 1:
        raise GridFormatError(f"{name} must be a non-empty 1-D array")
    if not np.all(np.isfinite(a)):
        raise GridFormatError(f"{name} must be finite")
    if np.any(np.diff(a) <= 0):
        raise GridFormatError(f"{name} must be strictly increasing")
    return a


@dataclass(frozen=True, eq=False)
class Sinogram:
    """Transform values ``values[i, k]`` at ``(s[i], u[k])``."""

    kind: str
    params: TransformParams
    s: np.ndarray
    u: np.ndarray
    values: np.ndarray
    meta: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown transform kind {self.kind!r}")
        validate_params(self.params)
        s = _check_axis("s samples", self.s)
        u = _check_axis("u samples", self.u)
        vals = _frozen(self.values)
        if vals.shape != (s.size, u.size):
            raise GridFormatError(f"values shape {vals.shape} does not match ({s.size}, {u.size})")
        if not np.all(np.isfinite(vals)):
            raise GridFormatError("sinogram values must be finite")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True, eq=False)
class XraySinogram:
    """X-ray transform values ``values[i, k]`` at ``(theta[i], t[k])``.

    Angles lie strictly inside ``(0, pi)``; other angles are reached through
    ``Xf(theta +- pi, -t) = Xf(theta, t)``.
    """

    theta: np.ndarray
    t: np.ndarray
    values: np.ndarray
    meta: Dict[str, str] = field(default_factory=dict)

    periodicity = "Xf(theta+-pi, -t) = Xf(theta, t)"

    def __post_init__(self):
        th = _check_axis("theta samples", self.theta)
        if th[0] <= 0 or th[-1] >= math.pi:
            raise GridFormatError("theta samples must lie strictly inside (0, pi)")
        t = _check_axis("t samples", self.t)
        vals = _frozen(self.values)
        if vals.shape != (th.size, t.size):
            raise GridFormatError(f"values shape {vals.shape} does not match ({th.size}, {t.size})")
        if not np.all(np.isfinite(vals)):
            raise GridFormatError("sinogram values must be finite")
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", vals)


# ---------------------------------------------------------------------------
# file format
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    return repr(float(v))


def _tag_line(fmt: str, meta: Dict[str, str]) -> str:
    if fmt not in FORMATS:
        raise ValueError(f"unknown payload format {fmt!r}; use one of {FORMATS}")
    extra = " ".join(f"{k}={v}" for k, v in sorted(meta.items()))
    return f"{fmt} {extra}".rstrip()


def _parse_tag(line: str):
    parts = line.split()
    if not parts or parts[0] not in FORMATS:
        raise GridFormatError(f"unknown payload tag line {line!r}")
    meta = {}
    for item in parts[1:]:
        if "=" not in item:
            raise GridFormatError(f"bad header item {item!r}")
        k, v = item.split("=", 1)
        meta[k] = v
    return parts[0], meta


def _payload_bytes(values: np.ndarray, fmt: str) -> bytes:
    if fmt == "f64le":
        return np.ascontiguousarray(values, dtype="<f8").tobytes()
    buf = io.StringIO()
    np.savetxt(buf, values, fmt="%.17g", delimiter=",")
    return buf.getvalue().encode()


def _read_payload(raw: bytes, fmt: str, shape) -> np.ndarray:
    n = shape[0] * shape[1]
    if fmt == "f64le":
        if len(raw) != 8 * n:
            raise GridFormatError(f"payload has {len(raw)} bytes, expected {8 * n}")
        vals = np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(shape)
    else:
        rows = [r for r in raw.decode().splitlines() if r.strip()]
        if len(rows) != shape[0]:
            raise GridFormatError(f"payload has {len(rows)} rows, expected {shape[0]}")
        try:
            vals = np.array([[float(v) for v in r.split(",")] for r in rows])
        except ValueError as exc:
            raise GridFormatError(f"bad csv payload: {exc}") from None
        if vals.shape != tuple(shape):
            raise GridFormatError(f"payload shape {vals.shape}, expected {tuple(shape)}")
    if not np.all(np.isfinite(vals)):
        raise GridFormatError("payload contains non-finite values")
    return vals


def _split_header(data: bytes, nlines: int):
    lines = []
    pos = 0
    for _ in range(nlines):
        end = data.find(b"\n", pos)
        if end < 0:
            raise GridFormatError("truncated header")
        try:
            lines.append(data[pos:end].decode("ascii"))
        except UnicodeDecodeError:
            raise GridFormatError("header is not ascii text") from None
        pos = end + 1
    return lines, data[pos:]


def _floats(line: str, count: Optional[int], what: str) -> List[float]:
    parts = line.split()
    if count is not None and len(parts) != count:
        raise GridFormatError(f"{what}: expected {count} fields, got {len(parts)}")
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise GridFormatError(f"{what}: non-numeric field in {line!r}") from None
    if not all(math.isfinite(v) for v in vals):
        raise GridFormatError(f"{what}: non-finite field")
    return vals


def _int_field(v: float, what: str) -> int:
    if v != int(v):
        raise GridFormatError(f"{what} must be an integer, got {v}")
    return int(v)


PathLike = Union[str, os.PathLike]


def grid_to_bytes(g: Grid2, fmt: str = "f64le", meta: Optional[Dict[str, str]] = None) -> bytes:
    head = " ".join([str(g.nx), str(g.ny), _fmt(g.x0), _fmt(g.y0), _fmt(g.dx), _fmt(g.dy)])
    tag = _tag_line(fmt, {**g.meta, **(meta or {})})
    return f"{head}\n{tag}\n".encode() + _payload_bytes(g.values, fmt)


def grid_from_bytes(data: bytes) -> Grid2:
    (head, tag), raw = _split_header(data, 2)
    nums = _floats(head, 6, "grid header")
    nx, ny = _int_field(nums[0], "nx"), _int_field(nums[1], "ny")
    if nx < 2 or ny < 2:
        raise GridFormatError(f"grid header needs nx, ny >= 2, got {nx}x{ny}")
    fmt, meta = _parse_tag(tag)
    vals = _read_payload(raw, fmt, (ny, nx))
    return Grid2(nx, ny, nums[2], nums[3], nums[4], nums[5], vals, meta=meta)


def write_grid(path: PathLike, g: Grid2, fmt: str = "f64le", meta: Optional[Dict[str, str]] = None):
    Path(path).write_bytes(grid_to_bytes(g, fmt, meta))


def read_grid(path: PathLike) -> Grid2:
    return grid_from_bytes(Path(path).read_bytes())


def grid_io_roundtrip(g: Grid2, fmt: str = "f64le") -> Grid2:
    """Serialize ``g`` and parse it back (bit-exact for ``f64le``)."""
    return grid_from_bytes(grid_to_bytes(g, fmt))


def _axis_line(a) -> str:
    return " ".join(_fmt(v) for v in a)


def sinogram_to_bytes(sino: Sinogram, fmt: str = "f64le", meta=None) -> bytes:
    p = sino.params
    head = (f"SINOGRAM {sino.kind} {_fmt(p.alpha)} {_fmt(p.beta)} {_fmt(p.c)} {p.m} "
            f"{sino.s.size} {sino.u.size}")
    tag = _tag_line(fmt, {**sino.meta, **(meta or {})})
    text = f"{head}\n{tag}\n{_axis_line(sino.s)}\n{_axis_line(sino.u)}\n"
    return text.encode() + _payload_bytes(sino.values, fmt)


def sinogram_from_bytes(data: bytes) -> Sinogram:
    (head, tag, sline, uline), raw = _split_header(data, 4)
    parts = head.split()
    if len(parts) != 8 or parts[0] != "SINOGRAM":
        raise GridFormatError(f"bad sinogram header {head!r}")
    if parts[1] not in KINDS:
        raise GridFormatError(f"unknown transform kind {parts[1]!r}")
    alpha, beta, c, m, ns, nu = _floats(" ".join(parts[2:]), 6, "sinogram header")
    ns, nu, m = _int_field(ns, "ns"), _int_field(nu, "nu"), _int_field(m, "m")
    if ns < 1 or nu < 1:
        raise GridFormatError("sinogram axes must be non-empty")
    fmt, meta = _parse_tag(tag)
    s = _floats(sline, ns, "s axis")
    u = _floats(uline, nu, "u axis")
    vals = _read_payload(raw, fmt, (ns, nu))
    params = validate_params(TransformParams(alpha, beta, c, m))
    return Sinogram(parts[1], params, np.array(s), np.array(u), vals, meta=meta)


def write_sinogram(path: PathLike, sino: Sinogram, fmt: str = "f64le", meta=None):
    Path(path).write_bytes(sinogram_to_bytes(sino, fmt, meta))


def read_sinogram(path: PathLike) -> Sinogram:
    return sinogram_from_bytes(Path(path).read_bytes())


def xray_to_bytes(sino: XraySinogram, fmt: str = "f64le", meta=None) -> bytes:
    head = f"XRAY {sino.theta.size} {sino.t.size}"
    tag = _tag_line(fmt, {**sino.meta, **(meta or {})})
    text = f"{head}\n{tag}\n{_axis_line(sino.theta)}\n{_axis_line(sino.t)}\n"
    return text.encode() + _payload_bytes(sino.values, fmt)


def xray_from_bytes(data: bytes) -> XraySinogram:
    (head, tag, thline, tline), raw = _split_header(data, 4)
    parts = head.split()
    if len(parts) != 3 or parts[0] != "XRAY":
        raise GridFormatError(f"bad x-ray sinogram header {head!r}")
    nth, nt = (_int_field(v, "axis length") for v in _floats(" ".join(parts[1:]), 2, "xray header"))
    if nth < 1 or nt < 1:
        raise GridFormatError("sinogram axes must be non-empty")
    fmt, meta = _parse_tag(tag)
    th = _floats(thline, nth, "theta axis")
    t = _floats(tline, nt, "t axis")
    vals = _read_payload(raw, fmt, (nth, nt))
    return XraySinogram(np.array(th), np.array(t), vals, meta=meta)


def write_xray(path: PathLike, sino: XraySinogram, fmt: str = "f64le", meta=None):
    Path(path).write_bytes(xray_to_bytes(sino, fmt, meta))


def read_xray(path: PathLike) -> XraySinogram:
    return xray_from_bytes(Path(path).read_bytes())


# ---------------------------------------------------------------------------
# parallel map
# ---------------------------------------------------------------------------

THREADS_ENV = "SEISRADON_THREADS"


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)


def parallel_map(fn: Callable, items: Iterable, threads: Optional[int] = None) -> list:
    """Ordered map over ``items``; uses a thread pool when more than one thread is allowed.

    Results come back in input order whatever the thread count, so every
    downstream reduction sees the same summation order.
    """
    items = list(items)
    n = thread_count() if threads is None else max(1, int(threads))
    if n == 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
