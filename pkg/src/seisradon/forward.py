"""Forward transforms along the power-curve families.

With ``X = x - c`` the three transforms integrate ``f`` along

* ``Q``: ``y = s * sign(X) |X|^alpha + u``
* ``P``: ``y = s |X|^alpha + u``
* ``R``: ``y^beta = s |X|^alpha + u`` (upper branch, weighted by ``1/y``)

Each integral is split at ``X = 0`` into the two half-lines ``X = +-d``
and each half-line is clipped to the part where the curve stays inside the
field's y-window.  The clipped segments of many samples are integrated
together by one batched adaptive rule, evaluated from both ends of each
segment so endpoint behaviour (``d^alpha`` at the axis, the square-root
edge of the R domain) is resolved without cancellation.
"""
from __future__ import annotations

import math
import warnings
from fractions import Fraction
from typing import Optional, Tuple

import numpy as np

from .core import Sinogram, TransformParams, validate_params
from .phantoms import AnalyticField
from .quadrature import DEFAULT_SPEC, QuadSpec, QuadratureWarning, integrate_halves

__all__ = [
    "default_s_axis",
    "default_u_axis",
    "du_forward",
    "forward",
    "forward_grid",
    "p_forward",
    "q_forward",
    "r_forward",
    "transform_batch",
]

R_DELTA = 1e-6  # below this v = w^(1/beta) the R integrand switches to its limit
CHUNK = 4096


def rational_part(v: float, which: str, max_den: int = 12) -> int:
    fr = Fraction(v).limit_denominator(max_den)
    if abs(float(fr) - v) > 1e-12:
        return 1
    return fr.numerator if which == "num" else fr.denominator


def endpoint_power(kind: str, p: TransformParams) -> int:
    """Power of the endpoint substitution that makes the segment integrands smooth."""
    q = rational_part(p.alpha, "den")
    if kind == "R":
        q = math.lcm(q, rational_part(p.beta, "num"))
    return min(q, 12)


def _field_eval(f: AnalyticField, p: TransformParams):
    shift = f.params.c - p.c
    if shift == 0:
        return f.local, 0.0
    return (lambda kx, ky, X, y: f.local(kx, ky, X - shift, y)), shift


def _power_window(lo, hi, s, u, alpha, dmax):
    """``d`` interval in ``[0, dmax]`` where ``lo <= s d^alpha + u <= hi``."""
    # tiny |s| gives infinite bounds, which the selection below handles
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        a = (lo - u) / s
        b = (hi - u) / s
    pos = s > 0
    neg = s < 0
    tlo = np.where(pos, a, np.where(neg, b, np.where((lo <= u) & (u <= hi), -np.inf, np.inf)))
    thi = np.where(pos, b, np.where(neg, a, np.where((lo <= u) & (u <= hi), np.inf, -np.inf)))
    dl = np.maximum(tlo, 0.0) ** (1.0 / alpha)
    dh = np.minimum(np.maximum(thi, 0.0) ** (1.0 / alpha), dmax)
    dl = np.minimum(dl, dh)
    return dl, dh, tlo, thi


def transform_batch(kind: str, f: AnalyticField, p: TransformParams, s, u,
                    spec: Optional[QuadSpec] = None, derivative: bool = False):
    """Evaluate a transform (or its u-derivative) at many ``(s, u)`` pairs.

    Returns ``(values, errors, converged)`` arrays shaped like the
    broadcast of ``s`` and ``u``.
    """
    if kind not in ("P", "Q", "R"):
        raise ValueError(f"unknown transform kind {kind!r}")
    validate_params(p)
    spec = spec or DEFAULT_SPEC
    s, u = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(u, dtype=float))
    shape = s.shape
    s, u = s.ravel(), u.ravel()
    vals = np.zeros(s.size)
    errs = np.zeros(s.size)
    ok = np.ones(s.size, dtype=bool)
    if not f.is_zero and s.size:
        for k in range(0, s.size, CHUNK):
            sl = slice(k, k + CHUNK)
            vals[sl], errs[sl], ok[sl] = _batch(kind, f, p, s[sl], u[sl], spec, derivative)
    return vals.reshape(shape), errs.reshape(shape), ok.reshape(shape)


def _batch(kind, f, p, s, u, spec, derivative):
    alpha, beta = float(p.alpha), float(p.beta)
    ev, shift = _field_eval(f, p)
    xlo, xhi = f.x_window[0] + shift, f.x_window[1] + shift
    ylo, yhi = f.y_window
    N = s.size
    # segment j = 2*i + side_index, side_index 0 for X = +d, 1 for X = -d
    sigma = np.tile([1.0, -1.0], N)
    ss = np.repeat(s, 2)
    uu = np.repeat(u, 2)
    dmax = np.where(sigma > 0, max(xhi, 0.0), max(-xlo, 0.0))
    s_eff = sigma * ss if kind == "Q" else ss

    if kind == "R":
        ytop = max(abs(ylo), abs(yhi))
        dl, dh, tlo, thi = _power_window(0.0, ytop ** beta, s_eff, uu, alpha, dmax)
        # w = 0 at d_e; exclude the w <= 0 side (tlo/thi were built for w >= 0)
        d_e = np.where(s_eff != 0, np.abs(uu / np.where(s_eff != 0, s_eff, 1.0)) ** (1 / alpha), np.inf)
        sing_lo = (s_eff > 0) & (uu < 0) & (dh > dl)
        sing_hi = (s_eff < 0) & (uu > 0) & (d_e <= dmax) & (dh > dl)
        empty = (s_eff == 0) & (uu <= 0)
        dh = np.where(empty, dl, dh)
    else:
        dl, dh, _, _ = _power_window(ylo, yhi, s_eff, uu, alpha, dmax)
        sing_lo = sing_hi = np.zeros(dl.size, dtype=bool)
        d_e = np.zeros(dl.size)

    length = dh - dl
    q = endpoint_power(kind, p)

    def integrand(j, side, off):
        from_lo = side == 0
        d = np.where(from_lo, dl[j] + off, dh[j] - off)
        X = sigma[j] * d
        se, uj = s_eff[j], uu[j]
        if kind != "R":
            y = se * d ** alpha + uj
            return ev(0, 1 if derivative else 0, X, y)
        w = se * d ** alpha + uj
        lo_edge = from_lo & sing_lo[j]
        hi_edge = ~from_lo & sing_hi[j]
        edge = lo_edge | hi_edge
        if np.any(edge):
            with np.errstate(divide="ignore", invalid="ignore"):
                de = d_e[j]
                dirn = np.where(lo_edge, 1.0, -1.0)
                w_edge = -uj * np.expm1(alpha * np.log1p(dirn * off / de))
            w = np.where(edge, w_edge, w)
        w = np.maximum(w, 0.0)
        v = w ** (1.0 / beta)
        small = v <= R_DELTA
        vs = np.where(small, 1.0, v)
        ws = np.where(small, 1.0, w)
        if not derivative:
            out = ev(0, 0, X, v) / vs
            if np.any(small):
                out = np.where(small, ev(0, 1, X, 0.0 * X), out)
            return out
        out = (ev(0, 1, X, v) * v - ev(0, 0, X, v)) / (beta * vs * ws)
        if np.any(small):
            with np.errstate(divide="ignore", invalid="ignore"):
                lim = ev(0, 2, X, 0.0 * X) * w ** (1.0 / beta - 1.0) / (2.0 * beta)
            out = np.where(small, np.where(w > 0, lim, 0.0), out)
        return out

    v, e, ok = integrate_halves(integrand, length, spec, power=q)
    v = v.reshape(N, 2).sum(axis=1)
    e = e.reshape(N, 2).sum(axis=1)
    ok = ok.reshape(N, 2).all(axis=1)
    return v, e, ok


def _pointwise(kind, f, p, s, u, spec, derivative):
    v, e, ok = transform_batch(kind, f, p, np.array([s]), np.array([u]), spec, derivative)
    if not ok[0]:
        warnings.warn(f"{kind} transform at (s={s}, u={u}) did not reach tolerance "
                      f"(error estimate {e[0]:.2e})", QuadratureWarning, stacklevel=3)
    return float(v[0])


def _require_sr(f: AnalyticField, check_space: bool):
    if check_space and not f.is_zero and f.space_tag != "SR":
        raise ValueError("the R transform needs a field that is even in y and zero on y = 0 (tag SR)")


def q_forward(f: AnalyticField, p: TransformParams, s: float, u: float,
              spec: Optional[QuadSpec] = None) -> float:
    """``int f(x + c, s x|x|^(alpha-1) + u) dx``.

    >>> from seisradon.phantoms import make_phantom
    >>> p = TransformParams(alpha=2, m=1)
    >>> round(q_forward(make_phantom("S", p), p, 0.0, 0.0), 7)
    0.8862269
    """
    return _pointwise("Q", f, p, s, u, spec, False)


def p_forward(f: AnalyticField, p: TransformParams, s: float, u: float,
              spec: Optional[QuadSpec] = None) -> float:
    """``int f(x + c, s|x|^alpha + u) dx``; only the even part of ``f`` about ``x = c`` contributes."""
    return _pointwise("P", f, p, s, u, spec, False)


def r_forward(f: AnalyticField, p: TransformParams, s: float, u: float,
              spec: Optional[QuadSpec] = None, check_space: bool = True) -> float:
    """``int f(x + c, w^(1/beta)) / w^(1/beta) dx`` over ``w = s|x|^alpha + u > 0``.

    Where ``v = w^(1/beta) <= 1e-6`` the integrand is replaced by its limit
    ``df/dy(x + c, 0)``.
    """
    _require_sr(f, check_space)
    return _pointwise("R", f, p, s, u, spec, False)


def du_forward(kind: str, f: AnalyticField, p: TransformParams, s: float, u: float,
               spec: Optional[QuadSpec] = None, check_space: bool = True) -> float:
    """u-derivative of a transform, differentiated under the integral sign.

    For P and Q this is the transform of ``df/dy``.  For R the integrand
    ``f(X, v)/v`` with ``v = w^(1/beta)`` is differentiated in ``u``, giving
    ``(f_y(X, v) v - f(X, v)) / (beta v w)``; near ``v = 0`` that is
    replaced by its leading term ``f_yy(X, 0) w^(1/beta - 1) / (2 beta)``,
    which is integrable.
    """
    if kind == "R":
        _require_sr(f, check_space)
    return _pointwise(kind, f, p, s, u, spec, True)


def forward(kind: str, f: AnalyticField, p: TransformParams, s: float, u: float,
            spec: Optional[QuadSpec] = None) -> float:
    return {"P": p_forward, "Q": q_forward, "R": r_forward}[kind](f, p, s, u, spec)


def default_s_axis(n: int = 33, s_max: float = 4.0) -> np.ndarray:
    return np.linspace(-s_max, s_max, n)


def default_u_axis(f: AnalyticField, kind: str, p: TransformParams, n: int = 129,
                   margin: float = 2.0) -> np.ndarray:
    """u samples covering the field's y-window (``y^beta`` for R) plus a margin."""
    if kind == "R":
        top = f.y_radius ** p.beta
        return np.linspace(-margin, top + margin, n)
    lo, hi = f.y_window
    return np.linspace(lo - margin, hi + margin, n)


def forward_grid(kind: str, f: AnalyticField, p: TransformParams, s_samples=None,
                 u_samples=None, spec: Optional[QuadSpec] = None,
                 derivative: bool = False) -> Sinogram:
    """Fill a :class:`Sinogram` on the tensor grid ``s_samples x u_samples``."""
    if kind == "R":
        _require_sr(f, True)
    s = default_s_axis() if s_samples is None else np.asarray(s_samples, dtype=float)
    u = default_u_axis(f, kind, p) if u_samples is None else np.asarray(u_samples, dtype=float)
    S, U = np.meshgrid(s, u, indexing="ij")
    v, e, ok = transform_batch(kind, f, p, S, U, spec, derivative)
    if not ok.all():
        warnings.warn(f"{np.count_nonzero(~ok)} of {ok.size} transform samples did not reach "
                      "tolerance", QuadratureWarning, stacklevel=2)
    meta = {"converged": str(int(ok.sum())) + "/" + str(ok.size)}
    if derivative:
        meta["quantity"] = "du"
    return Sinogram(kind, p, s, u, v, meta=meta)
