"""The X-ray transform on the plane and its principal-value inversion.

Lines are parametrized by the normal angle ``theta`` and offset ``t``::

    Xf(theta, t) = int f(t cos(theta) - sigma sin(theta), t sin(theta) + sigma cos(theta)) dsigma

and ``f`` is recovered by

    f(x, y) = 1/(2 pi^2) int_0^pi vp int d_t Xf(theta, t) / (x cos(theta) + y sin(theta) - t) dt dtheta.

Fields handed to the forward integrator expose a bounding ``box``, the
coordinates of vertical/horizontal kink lines (``kinks_x``, ``kinks_y``),
an endpoint substitution ``power`` and, optionally, ``jump_x`` for a jump
across the vertical kink line ``x = 0``.  :class:`AnalyticField` gets a
smooth adapter; the reduced fields of :mod:`seisradon.reduction` implement
the interface directly.  Each line is clipped to the box and cut at kink
crossings, and the crossing points are constructed exactly so the
integrator sees ``x = 0`` (or ``y = 0``) without rounding.
"""
from __future__ import annotations

import math
import warnings
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline, RectBivariateSpline

from .core import Grid2, XraySinogram
from .phantoms import AnalyticField
from .quadrature import (DEFAULT_SPEC, QuadSpec, QuadratureWarning, build_panels,
                         integrate_halves, integrate_line, integrate_vector, pv_integral)

__all__ = [
    "XrayData",
    "XrayOracle",
    "backproject",
    "default_xray_axes",
    "xray_batch",
    "xray_forward",
    "xray_forward_dt",
    "xray_forward_grid",
    "xray_invert",
    "xray_invert_grid",
]

CHUNK = 4096


class _SmoothField:
    """Adapter giving an :class:`AnalyticField` the plane-field interface."""

    kinks_x = ()
    kinks_y = ()
    power = 1
    jump_x = None

    def __init__(self, f: AnalyticField):
        self.f = f
        c = f.params.c
        self.box = (c + f.x_window[0], c + f.x_window[1], f.y_window[0], f.y_window[1])
        self.is_zero = f.is_zero

    def __call__(self, x, y):
        return self.f(x, y)

    def gradient(self, x, y):
        return self.f.gradient(x, y)


def _plane(field):
    return _SmoothField(field) if isinstance(field, AnalyticField) else field


def _canonical(theta, t):
    """Map angles to ``[0, pi)`` using ``Xf(theta + pi, -t) = Xf(theta, t)``."""
    th = np.mod(theta, 2 * np.pi)
    flip = th >= np.pi
    th = np.where(flip, th - np.pi, th)
    return th, np.where(flip, -t, t)


def _slab(p0, d, lo, hi):
    with np.errstate(divide="ignore", invalid="ignore"):
        a = (lo - p0) / d
        b = (hi - p0) / d
    par = d == 0
    inside = (lo <= p0) & (p0 <= hi)
    smin = np.where(par, np.where(inside, -np.inf, np.inf), np.minimum(a, b))
    smax = np.where(par, np.where(inside, np.inf, -np.inf), np.maximum(a, b))
    return smin, smax


def _segments(F, theta, t):
    """Cut each line into at most three segments with exact anchor points."""
    sn, cs = np.sin(theta), np.cos(theta)
    x0, y0 = t * cs, t * sn
    xlo, xhi, ylo, yhi = F.box
    a1, b1 = _slab(x0, -sn, xlo, xhi)
    a2, b2 = _slab(y0, cs, ylo, yhi)
    sa = np.maximum(a1, a2)
    sb = np.minimum(b1, b2)
    empty = ~(sa < sb)
    sa = np.where(empty, 0.0, sa)
    sb = np.where(empty, 0.0, sb)
    N = theta.size
    S = np.empty((N, 4))
    PX = np.empty((N, 4))
    PY = np.empty((N, 4))
    S[:, 0], PX[:, 0], PY[:, 0] = sa, x0 - sa * sn, y0 + sa * cs
    S[:, 3], PX[:, 3], PY[:, 3] = sb, x0 - sb * sn, y0 + sb * cs
    # kink crossings; a missing one collapses onto the far end
    for col, kinks, is_x in ((1, F.kinks_x, True), (2, F.kinks_y, False)):
        S[:, col], PX[:, col], PY[:, col] = sb, PX[:, 3], PY[:, 3]
        for k in kinks[:1]:
            with np.errstate(divide="ignore", invalid="ignore"):
                if is_x:
                    sig = (x0 - k) / sn
                    px = np.full(N, float(k))
                    py = t / sn if k == 0 else y0 + sig * cs
                else:
                    sig = (k - y0) / cs
                    px = t / cs if k == 0 else x0 - sig * sn
                    py = np.full(N, float(k))
            ok = np.isfinite(sig) & (sig > sa) & (sig < sb)
            S[:, col] = np.where(ok, sig, S[:, col])
            PX[:, col] = np.where(ok, px, PX[:, col])
            PY[:, col] = np.where(ok, py, PY[:, col])
    order = np.argsort(S, axis=1, kind="stable")
    S = np.take_along_axis(S, order, 1)
    PX = np.take_along_axis(PX, order, 1)
    PY = np.take_along_axis(PY, order, 1)
    return S, PX, PY


def xray_batch(field, theta, t, spec: Optional[QuadSpec] = None, derivative: bool = False,
               mode: str = "exact", fd_step: Optional[float] = None):
    """X-ray transform (or its t-derivative) of ``field`` at many ``(theta, t)``.

    ``mode`` selects how the t-derivative is obtained: ``"exact"``
    integrates ``cos(theta) f_x + sin(theta) f_y`` along the line (plus the
    jump term of a field with a jump across ``x = 0``), ``"fd"`` takes
    central differences of the transform with step ``fd_step``.

    Returns ``(values, errors, converged)``.
    """
    spec = spec or DEFAULT_SPEC
    F = _plane(field)
    theta, t = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(t, dtype=float))
    shape = theta.shape
    th, tt = _canonical(theta.ravel(), t.ravel())
    if derivative and mode == "fd":
        h = fd_step if fd_step is not None else 1e-4
        vp, ep, okp = xray_batch(F, th, tt + h, spec)
        vm, em, okm = xray_batch(F, th, tt - h, spec)
        sign = np.where(np.mod(theta.ravel(), 2 * np.pi) >= np.pi, -1.0, 1.0)
        out = sign * (vp - vm) / (2 * h)
        return out.reshape(shape), ((ep + em) / (2 * h)).reshape(shape), (okp & okm).reshape(shape)
    if derivative and mode != "exact":
        raise ValueError(f"unknown derivative mode {mode!r}")
    vals = np.zeros(th.size)
    errs = np.zeros(th.size)
    ok = np.ones(th.size, dtype=bool)
    if not getattr(F, "is_zero", False):
        for k in range(0, th.size, CHUNK):
            sl = slice(k, k + CHUNK)
            vals[sl], errs[sl], ok[sl] = _xray_chunk(F, th[sl], tt[sl], spec, derivative)
    if derivative:
        # d/dt of Xf(theta, t) at a flipped angle is minus the canonical derivative
        flip = np.mod(theta.ravel(), 2 * np.pi) >= np.pi
        vals = np.where(flip, -vals, vals)
    return vals.reshape(shape), errs.reshape(shape), ok.reshape(shape)


def _xray_chunk(F, theta, t, spec, derivative):
    N = theta.size
    S, PX, PY = _segments(F, theta, t)
    sn_s, cs_s = np.sin(theta), np.cos(theta)
    seg_n = np.repeat(np.arange(N), 3)
    sn, cs = sn_s[seg_n], cs_s[seg_n]
    length = (S[:, 1:] - S[:, :-1]).ravel()
    xs, ys = PX[:, :-1].ravel(), PY[:, :-1].ravel()
    xe, ye = PX[:, 1:].ravel(), PY[:, 1:].ravel()

    def integrand(j, side, off):
        start = side == 0
        x = np.where(start, xs[j] - off * sn[j], xe[j] + off * sn[j])
        y = np.where(start, ys[j] + off * cs[j], ye[j] - off * cs[j])
        if not derivative:
            return F(x, y)
        gx, gy = F.gradient(x, y)
        return cs[j] * gx + sn[j] * gy

    v, e, ok = integrate_halves(integrand, length, spec, power=getattr(F, "power", 1))
    v = v.reshape(N, 3).sum(axis=1)
    e = e.reshape(N, 3).sum(axis=1)
    ok = ok.reshape(N, 3).all(axis=1)
    if derivative and getattr(F, "jump_x", None) is not None:
        with np.errstate(divide="ignore", invalid="ignore"):
            eta0 = t / sn_s
            corr = np.where(sn_s > 0, F.jump_x(eta0) * cs_s / sn_s, 0.0)
        v = v + np.where(np.isfinite(corr), corr, 0.0)
    return v, e, ok


def xray_forward(f, theta: float, t: float, spec: Optional[QuadSpec] = None) -> float:
    """X-ray transform of ``f`` along one line.

    >>> from seisradon.phantoms import gaussian
    >>> round(xray_forward(gaussian(), 0.3, 0.0), 7)
    1.7724539
    """
    v, e, ok = xray_batch(f, np.array([theta]), np.array([t]), spec)
    if not ok[0]:
        warnings.warn(f"X-ray integral at theta={theta}, t={t} did not reach tolerance",
                      QuadratureWarning, stacklevel=2)
    return float(v[0])


def xray_forward_dt(f, theta: float, t: float, spec: Optional[QuadSpec] = None,
                    mode: str = "exact", fd_step: Optional[float] = None) -> float:
    """``d/dt Xf(theta, t)``, exactly (transform of the normal derivative) or by central differences."""
    v, _, _ = xray_batch(f, np.array([theta]), np.array([t]), spec, True, mode, fd_step)
    return float(v[0])


def xray_forward_grid(f, thetas: Sequence[float], ts: Sequence[float],
                      spec: Optional[QuadSpec] = None) -> XraySinogram:
    """Sample the X-ray transform on the tensor grid ``thetas x ts``."""
    th = np.asarray(thetas, dtype=float)
    tt = np.asarray(ts, dtype=float)
    TH, TT = np.meshgrid(th, tt, indexing="ij")
    v, _, ok = xray_batch(f, TH, TT, spec)
    if not ok.all():
        warnings.warn(f"{np.count_nonzero(~ok)} X-ray samples did not reach tolerance",
                      QuadratureWarning, stacklevel=2)
    return XraySinogram(th, tt, v)


def default_xray_axes(f, n_theta: int = 64, n_t: int = 129):
    """Angles at the midpoints of ``n_theta`` equal cells of ``(0, pi)`` and offsets covering the support."""
    F = _plane(f)
    xlo, xhi, ylo, yhi = F.box
    r = math.hypot(max(abs(xlo), abs(xhi)), max(abs(ylo), abs(yhi)))
    th = (np.arange(n_theta) + 0.5) * np.pi / n_theta
    return th, np.linspace(-r, r, n_t)


# ---------------------------------------------------------------------------
# sinogram evaluators for the inversion
# ---------------------------------------------------------------------------

class XrayOracle:
    """X-ray data of a known field, computed on demand.

    ``mode="exact"`` differentiates under the integral, ``mode="fd"`` uses
    central differences with step ``fd_step``.
    """

    def __init__(self, field, spec: Optional[QuadSpec] = None, mode: str = "exact",
                 fd_step: float = 1e-4):
        if mode not in ("exact", "fd"):
            raise ValueError(f"unknown derivative mode {mode!r}")
        self.field = _plane(field)
        self.spec = spec or DEFAULT_SPEC
        self.mode = mode
        self.fd_step = fd_step
        self.is_zero = getattr(self.field, "is_zero", False)

    def __call__(self, theta, t):
        return xray_batch(self.field, theta, t, self.spec)[0]

    def dt(self, theta, t):
        return xray_batch(self.field, theta, t, self.spec, True, self.mode, self.fd_step)[0]

    def t_window(self, theta: float):
        xlo, xhi, ylo, yhi = self.field.box
        c, s = math.cos(theta), math.sin(theta)
        proj = [x * c + y * s for x in (xlo, xhi) for y in (ylo, yhi)]
        return min(proj), max(proj)

    def panel_breaks(self, theta: float):
        return None


class XrayData:
    """Interpolated X-ray sinogram.

    Rows are extended periodically to cover ``[0, pi]`` through
    ``Xf(theta +- pi, -t) = Xf(theta, t)`` and a bicubic spline is fitted.
    ``mode="spline"`` differentiates the spline in ``t``; ``mode="fd"`` takes
    central differences of it with step ``min(dt)/2``.  Values outside the
    sampled t-range are zero.
    """

    def __init__(self, sino: XraySinogram, mode: str = "spline", pad: int = 4):
        if mode not in ("spline", "fd"):
            raise ValueError(f"unknown derivative mode {mode!r}")
        self.sino = sino
        self.mode = mode
        th, t, v = sino.theta, sino.t, sino.values
        pad = min(pad, th.size)
        mirror = np.array([CubicSpline(t, row, bc_type="natural")(-t) for row in v])
        mirror[:, (-t < t[0]) | (-t > t[-1])] = 0.0
        th_ext = np.concatenate([th[-pad:] - np.pi, th, th[:pad] + np.pi])
        v_ext = np.vstack([mirror[-pad:], v, mirror[:pad]])
        k = min(3, th_ext.size - 1)
        self.spline = RectBivariateSpline(th_ext, t, v_ext, kx=k, ky=min(3, t.size - 1), s=0)
        self.step = float(np.min(np.diff(t))) / 2
        self.is_zero = not np.any(v)

    def _inside(self, t):
        return (t >= self.sino.t[0]) & (t <= self.sino.t[-1])

    def __call__(self, theta, t):
        theta, t = np.broadcast_arrays(np.asarray(theta, float), np.asarray(t, float))
        return np.where(self._inside(t), self.spline.ev(theta, t), 0.0)

    def dt(self, theta, t):
        theta, t = np.broadcast_arrays(np.asarray(theta, float), np.asarray(t, float))
        if self.mode == "spline":
            d = self.spline.ev(theta, t, dy=1)
        else:
            h = self.step
            d = (self(theta, t + h) - self(theta, t - h)) / (2 * h)
        return np.where(self._inside(t), d, 0.0)

    def t_window(self, theta: float):
        return float(self.sino.t[0]), float(self.sino.t[-1])

    def panel_breaks(self, theta: float):
        return self.sino.t


# ---------------------------------------------------------------------------
# inversion
# ---------------------------------------------------------------------------

def _evaluator(Xf, spec):
    if isinstance(Xf, (XrayOracle, XrayData)):
        return Xf
    if isinstance(Xf, XraySinogram):
        return XrayData(Xf)
    return XrayOracle(Xf, spec)


def xray_invert(Xf, x: float, y: float, spec: Optional[QuadSpec] = None) -> float:
    """Reconstruct ``f(x, y)`` with nested adaptive quadrature.

    The outer integral over ``theta in (0, pi)`` and the inner principal
    value in ``t`` (pole at ``x cos(theta) + y sin(theta)``) are each done by
    the general-purpose routines; :func:`xray_invert_grid` is the fast path
    for many points.
    """
    spec = spec or DEFAULT_SPEC
    ev = _evaluator(Xf, spec)
    if ev.is_zero:
        return 0.0

    def inner(thetas):
        out = np.empty(thetas.size)
        for i, th in enumerate(thetas):
            lo, hi = ev.t_window(th)
            pole = x * math.cos(th) + y * math.sin(th)
            radius = max(abs(lo), abs(hi), abs(pole)) + 1.0
            r = pv_integral(lambda tt: ev.dt(np.full(np.shape(tt), th), tt), pole,
                            spec.replace(truncation_radius=radius))
            out[i] = r.value
        return out

    res = integrate_line(inner, 0.0, math.pi, spec)
    return res.value / (2 * math.pi ** 2)


def backproject(Xf, x, y, spec: Optional[QuadSpec] = None, order: int = 16):
    """Reconstruct ``f`` at many points ``(x, y)`` at once.

    For each angle the t-derivative is sampled on Gauss-Legendre panels
    (adaptive for oracle data, aligned with the sample grid for sinogram
    data) and the principal values at all poles come from one panel
    product-integration pass.  The angular integral is adaptive and shared
    by all points.

    Returns ``(values, converged)``.
    """
    spec = spec or DEFAULT_SPEC
    ev = _evaluator(Xf, spec)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x, y = np.broadcast_arrays(x, y)
    shape = x.shape
    xf, yf = x.ravel(), y.ravel()
    if ev.is_zero or xf.size == 0:
        return np.zeros(shape), True
    data = isinstance(ev, XrayData)

    def per_angle(thetas):
        rows = np.empty((thetas.size, xf.size))
        for i, th in enumerate(thetas):
            lo, hi = ev.t_window(th)
            k = lambda tt, th=th: ev.dt(np.full(tt.shape, th), tt)
            if data:
                pan = build_panels(k, lo, hi, spec, order=4, breaks=ev.panel_breaks(th),
                                   adaptive=False)
            else:
                pan = build_panels(k, lo, hi, spec, order=order, n_initial=8)
            rows[i] = pan.hilbert(xf * math.cos(th) + yf * math.sin(th))
        return rows

    # the sinogram spline has knots at the sampled angles
    breaks = np.mod(ev.sino.theta, math.pi) if data else None
    vals, _, ok = integrate_vector(per_angle, 0.0, math.pi, spec, n_initial=4, breaks=breaks)
    return (vals / (2 * math.pi ** 2)).reshape(shape), ok


def xray_invert_grid(Xf, geometry, spec: Optional[QuadSpec] = None) -> Grid2:
    """Reconstruct on the grid ``geometry = (nx, ny, x0, y0, dx, dy)``."""
    nx, ny, x0, y0, dx, dy = geometry
    xs = x0 + dx * np.arange(nx)
    ys = y0 + dy * np.arange(ny)
    X, Y = np.meshgrid(xs, ys)
    vals, ok = backproject(Xf, X, Y, spec)
    valid = np.isfinite(vals) & ok
    return Grid2(nx, ny, x0, y0, dx, dy, np.where(np.isfinite(vals), vals, 0.0), valid=valid)
