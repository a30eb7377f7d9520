"""Principal-value inversion of the Q, P and R transforms.

With ``X = x - c`` every inversion has the shape

    f(x, y) = A(x, y) * 1/(2 pi^2) int ds vp int d_u T f(s, u) / (Y - s Xi - u) du

where

====  ===================  ==============  =========================
kind  ``Xi``               ``Y``           ``A``
====  ===================  ==============  =========================
Q     ``X|X|^(alpha-1)``   ``y``           ``alpha |X|^(alpha-1)``
P     ``|X|^alpha``        ``y``           ``alpha/2 |X|^(alpha-1)``
R     ``|X|^alpha``        ``|y|^beta``    ``alpha/2 |X|^(alpha-1) |y|``
====  ===================  ==============  =========================

The s-integral runs either directly over ``|s| <= s_max`` or, by default,
over ``theta in (0, pi)`` with ``s = -cot(theta)`` and ``u = t/sin(theta)``,
which turns the double integral into a filtered backprojection with poles
``Xi cos(theta) + Y sin(theta)`` and kernel
``d_u T f(-cot(theta), t/sin(theta)) / sin(theta)^2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np
from scipy.interpolate import BarycentricInterpolator, RectBivariateSpline

from .core import Grid2, Sinogram, TransformParams, validate_params
from .forward import transform_batch
from .phantoms import AnalyticField
from .quadrature import (DEFAULT_SPEC, NODES, QuadSpec, _gk_reduce, build_panels,
                         integrate_vector)
from .reduction import KIND_FOR, ReducedField, arccot_neg
from .xray import xray_batch

__all__ = [
    "HullError",
    "InversionJob",
    "SinogramDerivative",
    "du_sinogram",
    "invert",
    "invert_p",
    "invert_q",
    "invert_r",
    "required_u_hull",
]

FD4 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
ORACLE_FD_STEP = 1e-3
# beyond this |s| the transform loses digits to cancellation in s|X|^alpha + u and the
# oracle kernel is taken from the X-ray derivative of the reduced field instead
S_SWITCH = 1e3


class HullError(ValueError):
    """A sinogram does not cover the (s, u) range an operation needs."""


Geometry = Tuple[int, int, float, float, float, float]


@dataclass(frozen=True)
class InversionJob:
    """Everything needed to reconstruct one grid.

    Exactly one of ``field`` (oracle mode: the transform is computed on
    demand from a known field) and ``sinogram`` (data mode) is set.
    ``du_mode`` is ``"exact"`` or ``"fd"``; ``s_mode`` is ``"theta"`` or
    ``"direct"``.
    """

    kind: str
    params: TransformParams
    grid: Geometry
    field: Optional[AnalyticField] = None
    sinogram: Optional[Sinogram] = None
    spec: QuadSpec = DEFAULT_SPEC
    du_mode: str = "exact"
    s_mode: str = "theta"
    s_max: float = 50.0

    def __post_init__(self):
        if self.kind not in ("P", "Q", "R"):
            raise ValueError(f"unknown transform kind {self.kind!r}")
        validate_params(self.params)
        if (self.field is None) == (self.sinogram is None):
            raise ValueError("give exactly one of field (oracle mode) or sinogram (data mode)")
        if self.du_mode not in ("exact", "fd"):
            raise ValueError(f"du_mode must be 'exact' or 'fd', got {self.du_mode!r}")
        if self.s_mode not in ("theta", "direct"):
            raise ValueError(f"s_mode must be 'theta' or 'direct', got {self.s_mode!r}")
        if self.sinogram is not None:
            sino = self.sinogram
            if sino.kind != self.kind or sino.params != self.params:
                raise ValueError(f"sinogram is a {sino.kind} transform with {sino.params}, "
                                 f"job asks for {self.kind} with {self.params}")
            if self.du_mode == "exact":
                raise ValueError("exact u-derivatives need the field; use du_mode='fd' in data mode")
        nx, ny, x0, y0, dx, dy = self.grid
        Grid2(nx, ny, x0, y0, dx, dy, np.zeros((ny, nx)))  # geometry check

    @property
    def oracle(self) -> bool:
        return self.field is not None


# ---------------------------------------------------------------------------
# u-derivatives of sinogram data
# ---------------------------------------------------------------------------

class SinogramDerivative:
    """Fourth-order central differences in ``u`` of a bicubic sinogram interpolant.

    The step equals the u-grid spacing, so at grid nodes the stencil uses
    the samples themselves.
    """

    def __init__(self, sino: Sinogram):
        self.sino = sino
        s, u = sino.s, sino.u
        if s.size < 4 or u.size < 5:
            raise HullError("finite differences need at least 4 s samples and 5 u samples")
        self.h = float((u[-1] - u[0]) / (u.size - 1))
        self.spline = RectBivariateSpline(s, u, sino.values, kx=3, ky=3, s=0)
        self.u_lo = float(u[0]) + 2 * self.h
        self.u_hi = float(u[-1]) - 2 * self.h
        self.s_lo, self.s_hi = float(s[0]), float(s[-1])

    def inside(self, s, u):
        return (s >= self.s_lo) & (s <= self.s_hi) & (u >= self.u_lo) & (u <= self.u_hi)

    def __call__(self, s, u, strict: bool = True):
        s, u = np.broadcast_arrays(np.asarray(s, float), np.asarray(u, float))
        ok = self.inside(s, u)
        if strict and not np.all(ok):
            raise HullError(f"u-derivative requested outside the sinogram hull "
                            f"s in [{self.s_lo}, {self.s_hi}], u in [{self.u_lo}, {self.u_hi}]")
        h = self.h
        acc = np.zeros(s.shape)
        for k, w in enumerate(FD4):
            if w:
                acc = acc + w * self.spline.ev(s, u + (k - 2) * h)
        return np.where(ok, acc / h, 0.0)


def du_sinogram(sino: Sinogram, s: float, u: float, mode: str = "fd",
                f: Optional[AnalyticField] = None, spec: Optional[QuadSpec] = None) -> float:
    """``d_u`` of the transform at ``(s, u)``.

    ``mode="fd"`` differentiates the sampled data; ``mode="exact"``
    evaluates the derivative of the forward transform of ``f``.
    """
    if mode == "exact":
        if f is None:
            raise ValueError("exact mode needs the field")
        v, _, _ = transform_batch(sino.kind, f, sino.params, np.array([s]), np.array([u]), spec, True)
        return float(v[0])
    if mode != "fd":
        raise ValueError(f"unknown mode {mode!r}")
    return float(SinogramDerivative(sino)(s, u))


# ---------------------------------------------------------------------------
# the reconstruction engine
# ---------------------------------------------------------------------------

def _coordinates(kind, p: TransformParams, X, y):
    a = float(p.alpha)
    aX = np.abs(X)
    if kind == "Q":
        Xi = X * aX ** (a - 1.0)
        Y = y
        A = a * aX ** (a - 1.0)
    else:
        Xi = aX ** a
        Y = y if kind == "P" else np.abs(y) ** p.beta
        A = 0.5 * a * aX ** (a - 1.0)
        if kind == "R":
            A = A * np.abs(y)
    return Xi, Y, A


def required_u_hull(kind, p: TransformParams, geometry: Geometry, s_lo: float, s_hi: float):
    """Range of the poles ``Y - s Xi`` over the output grid and ``s in [s_lo, s_hi]``."""
    nx, ny, x0, y0, dx, dy = geometry
    X = x0 + dx * np.arange(nx) - p.c
    y = y0 + dy * np.arange(ny)
    Xi, _, _ = _coordinates(kind, p, X, np.zeros_like(X))
    _, Y, _ = _coordinates(kind, p, np.zeros_like(y), y)
    lo = min(float(Y.min()) - s * xi for s in (s_lo, s_hi) for xi in (Xi.min(), Xi.max()))
    hi = max(float(Y.max()) - s * xi for s in (s_lo, s_hi) for xi in (Xi.min(), Xi.max()))
    return lo, hi


class _Kernel:
    """``d_u T f`` as a function of (s, u), with the u-support for each s."""

    def __init__(self, job: InversionJob):
        self.job = job
        self.kind = job.kind
        self.p = job.params
        if job.oracle:
            f = job.field
            if job.kind == "P" and f.space_tag == "S":
                # P only sees the even part about x = c
                f = f.even_part()
            self.F = ReducedField(f, KIND_FOR[job.kind])
            self.data = None
        else:
            self.data = SinogramDerivative(job.sinogram)
        self.is_zero = (job.field.is_zero if job.oracle else not np.any(job.sinogram.values))

    def du(self, s, u, spec):
        job = self.job
        if self.data is not None:
            return self.data(s, u, strict=False)
        if job.du_mode == "exact":
            return transform_batch(self.kind, job.field, self.p, s, u, spec, True)[0]
        h = ORACLE_FD_STEP
        acc = 0.0
        for k, w in enumerate(FD4):
            if w:
                acc = acc + w * transform_batch(self.kind, job.field, self.p, s, u + (k - 2) * h, spec)[0]
        return acc / h

    def u_window(self, s):
        if self.data is not None:
            return self.data.u_lo, self.data.u_hi
        xlo, xhi, ylo, yhi = self.F.box
        vals = [eta - s * xi for xi in (xlo, xhi) for eta in (ylo, yhi)]
        return min(vals), max(vals)

    def u_breaks(self):
        if self.data is None:
            return None
        u = self.job.sinogram.u
        return u[(u >= self.data.u_lo - 1e-12) & (u <= self.data.u_hi + 1e-12)]

    def s_range(self):
        if self.data is not None:
            return self.data.s_lo, self.data.s_hi
        return -self.job.s_max, self.job.s_max


class _KinkSplit:
    """Angular rule for poles whose integrand has a kink at a known angle.

    For R the curves through ``u = 0`` degenerate when ``s > 0``, and the
    filtered kernel is only Lipschitz at ``t = 0``.  The integrand of pole
    ``p`` therefore has a kink where ``Xi_p cos(theta) + Y_p sin(theta)``
    vanishes, a different angle for every pole.  ``H(theta, t)`` at fixed
    ``t`` stays smooth, so inside an interval holding a kink each side gets
    its own 21-point rule, with ``H`` interpolated in ``theta`` from the
    panels already built at the interval's nodes.  The split result
    replaces the plain one when its error estimate is smaller.
    """

    def __init__(self, xi, yy):
        self.xi, self.yy = xi, yy
        self.kink = np.mod(np.arctan2(-xi, yy), math.pi)
        self.panels = []
        self._full = BarycentricInterpolator(NODES, np.eye(21))
        self._inner = BarycentricInterpolator(NODES[1:-1], np.eye(19))

    def __call__(self, lo, hi, K, E):
        pans, self.panels = self.panels, []
        for i in range(lo.size):
            comps = np.flatnonzero((self.kink > lo[i]) & (self.kink < hi[i]))
            if comps.size == 0:
                continue
            c, h = 0.5 * (lo[i] + hi[i]), 0.5 * (hi[i] - lo[i])
            kp = self.kink[comps][:, None]
            hl, hr = 0.5 * (kp - lo[i]), 0.5 * (hi[i] - kp)
            q = np.concatenate([lo[i] + hl * (1 + NODES), kp + hr * (1 + NODES)], axis=1)
            t = self.xi[comps, None] * np.cos(q) + self.yy[comps, None] * np.sin(q)
            H = np.stack([p.hilbert(t) for p in pans[21 * i:21 * i + 21]], axis=-1)
            r = (q - c) / h
            g = np.einsum("cqj,cqj->cq", self._full(r), H)
            g19 = np.einsum("cqj,cqj->cq", self._inner(r), H[..., 1:-1])
            half = np.concatenate([hl, hr]).ravel()
            sides = np.concatenate([g[:, :21], g[:, 21:]])
            Ks, Es = _gk_reduce(sides, half)
            K19, _ = _gk_reduce(np.concatenate([g19[:, :21], g19[:, 21:]]), half)
            n = comps.size
            Knew = Ks[:n] + Ks[n:]
            Enew = Es[:n] + Es[n:] + np.abs(Knew - K19[:n] - K19[n:])
            better = Enew < E[i, comps]
            K[i, comps[better]] = Knew[better]
            E[i, comps[better]] = Enew[better]
        return K, E


def _panels(k, lo, hi, breaks, spec):
    if breaks is not None:
        return build_panels(k, lo, hi, spec, order=4, breaks=breaks, adaptive=False)
    return build_panels(k, lo, hi, spec, order=16, n_initial=8)


def _reconstruct(job: InversionJob):
    nx, ny, x0, y0, dx, dy = job.grid
    xs = x0 + dx * np.arange(nx)
    ys = y0 + dy * np.arange(ny)
    Xg, yg = np.meshgrid(xs - job.params.c, ys)
    Xi, Y, A = _coordinates(job.kind, job.params, Xg, yg)
    # fields in the admissible spaces vanish where A does (on x = c, and on y = 0 for R);
    # those samples are exact zeros and stay out of the angular integral
    # (grid coordinates are x0 + i*dx, so "on the axis" is judged up to rounding)
    eps = 64 * np.finfo(float).eps
    live = np.abs(Xg) > eps * max(np.max(np.abs(Xg)), abs(job.params.c), 1.0)
    if job.kind == "R":
        live &= np.abs(yg) > eps * max(np.max(np.abs(yg)), 1.0)
    live = live.ravel()
    xi, yy = Xi.ravel()[live], Y.ravel()[live]
    kern = _Kernel(job)
    if kern.is_zero or not live.any():
        return np.zeros((ny, nx)), np.ones((ny, nx), dtype=bool)
    s_lo, s_hi = kern.s_range()
    if kern.data is not None:
        lo, hi = required_u_hull(job.kind, job.params, job.grid, s_lo, s_hi)
        if lo < kern.data.u_lo or hi > kern.data.u_hi:
            raise HullError(f"sinogram u-range [{kern.data.u_lo:.6g}, {kern.data.u_hi:.6g}] "
                            f"(after the finite-difference margin) does not cover the poles "
                            f"[{lo:.6g}, {hi:.6g}] of this grid")
    breaks = kern.u_breaks()
    spec = job.spec

    if job.s_mode == "theta":
        split = _KinkSplit(xi, yy) if job.kind == "R" else None

        def rows(thetas):
            out = np.empty((thetas.size, xi.size))
            for i, th in enumerate(thetas):
                sn, cs = math.sin(th), math.cos(th)
                s = -cs / sn
                sub = spec.replace(abs_tol=spec.abs_tol * sn * sn)
                ulo, uhi = kern.u_window(s)
                if kern.data is None and abs(s) > S_SWITCH:
                    k = lambda t: xray_batch(kern.F, np.full(t.shape, th), t, spec, derivative=True)[0]
                else:
                    k = lambda t: kern.du(np.full(t.shape, s), t / sn, sub) / (sn * sn)
                br = None if breaks is None else breaks * sn
                pan = _panels(k, ulo * sn, uhi * sn, br, spec)
                out[i] = pan.hilbert(xi * cs + yy * sn)
                if split is not None:
                    split.panels.append(pan)
            return out

        lo, hi = arccot_neg(s_lo), arccot_neg(s_hi)
        if kern.data is None:
            lo, hi = 0.0, math.pi
    else:
        def rows(svals):
            out = np.empty((svals.size, xi.size))
            for i, s in enumerate(svals):
                ulo, uhi = kern.u_window(s)
                k = lambda u: kern.du(np.full(u.shape, s), u, spec)
                pan = _panels(k, ulo, uhi, breaks, spec)
                out[i] = pan.hilbert(yy - s * xi)
            return out

        lo, hi = s_lo, s_hi
        split = None

    vals, _, ok = integrate_vector(rows, lo, hi, spec, n_initial=4, refine=split)
    out = np.zeros(live.size)
    out[live] = A.ravel()[live] * vals / (2 * math.pi ** 2)
    valid = np.isfinite(out) & ok
    return np.where(np.isfinite(out), out, 0.0).reshape(ny, nx), valid.reshape(ny, nx)


def invert(job: InversionJob) -> Grid2:
    """Reconstruct ``f`` on ``job.grid``; failed samples are cleared in ``Grid2.valid``."""
    values, valid = _reconstruct(job)
    nx, ny, x0, y0, dx, dy = job.grid
    meta = {"kind": job.kind, "s_mode": job.s_mode, "du_mode": job.du_mode,
            "source": "oracle" if job.oracle else "sinogram"}
    return Grid2(nx, ny, x0, y0, dx, dy, values, valid=valid, meta=meta)


def _invert_kind(job: InversionJob, kind: str) -> Grid2:
    if job.kind != kind:
        raise ValueError(f"job is for the {job.kind} transform, not {kind}")
    if job.oracle and not job.field.is_zero:
        if kind == "R" and job.field.space_tag != "SR":
            raise ValueError("the R inversion needs a field tagged SR")
    return invert(job)


def invert_q(job: InversionJob) -> Grid2:
    """Reconstruct from the Q transform (any field vanishing to order ``m`` on the axis)."""
    return _invert_kind(job, "Q")


def invert_p(job: InversionJob) -> Grid2:
    """Reconstruct from the P transform; for a field that is not even about ``x = c`` this yields its even part."""
    return _invert_kind(job, "P")


def invert_r(job: InversionJob) -> Grid2:
    """Reconstruct from the R transform; the result is even in ``x - c`` and in ``y``."""
    return _invert_kind(job, "R")
