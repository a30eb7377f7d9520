"""One-dimensional quadrature.

Everything here is built on a single adaptive Gauss-Kronrod (10, 21) pair.
Integrands are always vectorized: they receive a 1-D array of abscissae and
return an array of the same length.  The batched driver :func:`integrate_many`
runs many independent integrals through one adaptive loop, which is what the
transform modules use to keep numpy busy.

Principal values are computed by singularity subtraction, never by
excluding a neighbourhood of the pole.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Sequence, Union

import numpy as np
from numpy.polynomial import legendre as _leg

__all__ = [
    "QuadSpec",
    "QuadResult",
    "QuadratureWarning",
    "Panels",
    "build_panels",
    "integrate_halves",
    "integrate_line",
    "integrate_many",
    "integrate_real_line",
    "integrate_vector",
    "pv_integral",
]

AUTO_MARGIN = 2.0
MAX_ACTIVE = 200_000  # cap on simultaneously active subintervals
MAX_VECTOR_INTERVALS = 2048

# Gauss-Kronrod 21-point abscissae and weights (QUADPACK qk21), positive half.
_XGK = np.array([
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.0,
])
_WGK = np.array([
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208167347891,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
])
_WG = np.array([
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])

# full 21-node rule on [-1, 1], ordered left to right
NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.zeros(21)
GAUSS_WEIGHTS[1:10:2] = _WG
GAUSS_WEIGHTS[11:20:2] = _WG[::-1]

_EPS = np.finfo(float).eps
_TINY = np.finfo(float).tiny


@dataclass(frozen=True)
class QuadSpec:
    """Tolerances shared by every integral in the package.

    ``truncation_radius`` is either a positive number or ``"auto"``; the
    latter resolves to the caller's decay radius plus a fixed margin.
    """

    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_depth: int = 40
    truncation_radius: Union[float, str] = "auto"

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if int(self.max_depth) != self.max_depth or self.max_depth < 1:
            raise ValueError("max_depth must be an integer >= 1")
        r = self.truncation_radius
        if isinstance(r, str):
            if r != "auto":
                raise ValueError(f"truncation_radius must be positive or 'auto', got {r!r}")
        elif not (r > 0 and math.isfinite(r)):
            raise ValueError(f"truncation_radius must be positive or 'auto', got {r!r}")

    def radius(self, decay_radius: Optional[float] = None) -> float:
        if self.truncation_radius != "auto":
            return float(self.truncation_radius)
        if decay_radius is None:
            raise ValueError("truncation_radius='auto' needs a decay radius from the caller")
        return float(decay_radius) + AUTO_MARGIN

    def replace(self, **kw) -> "QuadSpec":
        fields = dict(rel_tol=self.rel_tol, abs_tol=self.abs_tol,
                      max_depth=self.max_depth, truncation_radius=self.truncation_radius)
        fields.update(kw)
        return QuadSpec(**fields)


DEFAULT_SPEC = QuadSpec()


class QuadratureWarning(RuntimeWarning):
    """An integral did not reach its tolerance; the estimate is still returned."""


class QuadResult(NamedTuple):
    value: float
    error: float
    converged: bool
    truncation: float = 0.0


def _gk_reduce(fx, h):
    """Kronrod estimate and QUADPACK-style error for rows of 21 samples."""
    # row-wise sums (not BLAS) so a row's result does not depend on its batch
    resk = (fx * KRONROD_WEIGHTS).sum(axis=1)
    resg = (fx * GAUSS_WEIGHTS).sum(axis=1)
    mean = 0.5 * resk
    ah = np.abs(h)
    resabs = (np.abs(fx) * KRONROD_WEIGHTS).sum(axis=1) * ah
    resasc = (np.abs(fx - mean[:, None]) * KRONROD_WEIGHTS).sum(axis=1) * ah
    err = np.abs((resk - resg) * h)
    with np.errstate(invalid="ignore", divide="ignore"):
        scaled = resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5)
    err = np.where((resasc != 0) & (err != 0), scaled, err)
    err = np.where(resabs > _TINY / (50 * _EPS), np.maximum(50 * _EPS * resabs, err), err)
    return resk * h, err


def integrate_many(g: Callable, a, b, spec: Optional[QuadSpec] = None, *,
                   abs_tol: Optional[float] = None, rel_tol: Optional[float] = None):
    """Integrate ``M`` independent integrands over their own intervals.

    ``g(idx, x)`` is called with integer component indices and abscissae
    (equal-length 1-D arrays) and returns the integrand values.  Each
    component is refined on its own; the tolerance of component ``i`` is
    ``max(abs_tol, rel_tol * |I_i|)``.

    Returns ``(values, errors, converged)`` arrays of length ``M``.
    """
    spec = spec or DEFAULT_SPEC
    atol = spec.abs_tol if abs_tol is None else abs_tol
    rtol = spec.rel_tol if rel_tol is None else rel_tol
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    a, b = np.broadcast_arrays(a, b)
    M = a.size
    values = np.zeros(M)
    errors = np.zeros(M)
    span = np.abs(b - a)

    comp = np.flatnonzero(span > 0)
    lo = a[comp].copy()
    hi = b[comp].copy()
    depth = np.zeros(comp.size, dtype=int)
    while comp.size:
        c = 0.5 * (lo + hi)
        h = 0.5 * (hi - lo)
        x = c[:, None] + h[:, None] * NODES[None, :]
        fx = np.asarray(g(np.repeat(comp, 21), x.ravel()), dtype=float).reshape(-1, 21)
        K, E = _gk_reduce(fx, h)
        est = values + np.bincount(comp, weights=K, minlength=M)
        tol = np.maximum(atol, rtol * np.abs(est))
        share = np.abs(hi - lo) / span[comp]
        ok = ((E <= tol[comp] * share) | (depth >= spec.max_depth)
              | (np.abs(h) <= 4 * _EPS * np.maximum(np.abs(c), 1e-300)))
        ok |= ~np.isfinite(K)
        if 2 * np.count_nonzero(~ok) > MAX_ACTIVE:
            # refinement is not converging anywhere useful; stop and report
            ok[:] = True
        values += np.bincount(comp[ok], weights=K[ok], minlength=M)
        errors += np.bincount(comp[ok], weights=E[ok], minlength=M)
        keep = ~ok
        comp = np.repeat(comp[keep], 2)
        lo_k, hi_k, c_k = lo[keep], hi[keep], c[keep]
        lo = np.column_stack([lo_k, c_k]).ravel()
        hi = np.column_stack([c_k, hi_k]).ravel()
        depth = np.repeat(depth[keep] + 1, 2)
    tol = np.maximum(atol, rtol * np.abs(values))
    converged = np.isfinite(values) & (errors <= tol)
    return values, errors, converged


def integrate_vector(g: Callable, a: float, b: float, spec: Optional[QuadSpec] = None, *,
                     n_initial: int = 1, abs_tol: Optional[float] = None,
                     rel_tol: Optional[float] = None, refine: Optional[Callable] = None,
                     breaks=None):
    """Adaptive integral of a vector-valued integrand over one interval.

    ``g(x)`` maps ``n`` abscissae to an ``(n, m)`` array.  The partition is
    shared across components and refined until the summed error of every
    component is below ``max(abs_tol, rel_tol * max_j |I_j|)`` (a sup-norm
    criterion).  As in QUADPACK the tolerance is global: each round bisects
    the intervals with the largest errors, which copes with integrable
    end-point singularities that a per-interval share of the tolerance
    would chase forever.

    Also as in QUADPACK, an interval whose halves do not reduce the error
    estimate while barely changing the value is taken to sit at the
    round-off floor of ``g`` and is not bisected again.  Such intervals
    count as converged; their estimates stay in the returned errors.

    ``refine(lo, hi, K, E)``, if given, is called right after ``g`` has
    been evaluated on the 21-point rules of a batch of new intervals and
    may return better ``(K, E)`` for them, e.g. for components with a
    known interior kink.

    ``breaks`` are extra initial edges (points where ``g`` is not smooth);
    those outside ``(a, b)`` are ignored.

    Returns ``(values, errors, converged)`` with ``values``/``errors`` of
    shape ``(m,)`` and a scalar ``converged`` flag.
    """
    spec = spec or DEFAULT_SPEC
    atol = spec.abs_tol if abs_tol is None else abs_tol
    rtol = spec.rel_tol if rel_tol is None else rel_tol

    def panel(lo, hi):
        c = 0.5 * (lo + hi)
        h = 0.5 * (hi - lo)
        x = (c[:, None] + h[:, None] * NODES[None, :]).ravel()
        fx = np.asarray(g(x), dtype=float)
        m = fx.shape[1] if fx.ndim == 2 else 1
        fx = fx.reshape(lo.size, 21, m).transpose(0, 2, 1).reshape(-1, 21)
        K, E = _gk_reduce(fx, np.repeat(h, m))
        K, E = K.reshape(lo.size, m), E.reshape(lo.size, m)
        if refine is not None:
            K, E = refine(lo, hi, K, E)
        return K, E

    edges = np.linspace(a, b, n_initial + 1)
    if breaks is not None:
        br = np.asarray(breaks, dtype=float).ravel()
        inside = (br > min(a, b)) & (br < max(a, b))
        edges = np.unique(np.concatenate([edges, br[inside]]))
        if b < a:
            edges = edges[::-1]
    lo, hi = edges[:-1], edges[1:]
    K, E = panel(lo, hi)
    depth = np.zeros(lo.size, dtype=int)
    floor = np.zeros(lo.size, dtype=bool)
    converged = False
    while True:
        total = K.sum(axis=0)
        err = E.sum(axis=0)
        if not np.all(np.isfinite(total)):
            break
        tol = max(atol, rtol * float(np.max(np.abs(total))))
        if np.all(E[~floor].sum(axis=0) <= tol):
            converged = True
            break
        score = E.max(axis=1)
        c = 0.5 * (lo + hi)
        can = ((depth < spec.max_depth) & ~floor
               & (np.abs(hi - lo) > 8 * _EPS * np.maximum(np.abs(c), 1e-300)))
        order = np.flatnonzero(can)[np.argsort(-score[can], kind="stable")]
        if order.size == 0:
            break
        # bisect the largest contributors until what is left would fit in half the tolerance
        left = score.sum() - np.cumsum(score[order])
        n_split = int(np.searchsorted(-left, -0.5 * tol)) + 1
        pick = np.sort(order[:min(n_split, order.size)])
        if lo.size + pick.size > MAX_VECTOR_INTERVALS:
            break
        mid = c[pick]
        new_lo = np.column_stack([lo[pick], mid]).ravel()
        new_hi = np.column_stack([mid, hi[pick]]).ravel()
        Kn, En = panel(new_lo, new_hi)
        Kc = Kn.reshape(-1, 2, Kn.shape[1]).sum(axis=1)
        Ec = En.reshape(-1, 2, En.shape[1]).sum(axis=1).max(axis=1)
        stuck = ((Ec >= 0.7 * score[pick])
                 & (np.abs(Kc - K[pick]).max(axis=1) <= 1e-5 * np.abs(Kc).max(axis=1)))
        keep = np.ones(lo.size, dtype=bool)
        keep[pick] = False
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        K = np.concatenate([K[keep], Kn])
        E = np.concatenate([E[keep], En])
        depth = np.concatenate([depth[keep], np.repeat(depth[pick] + 1, 2)])
        floor = np.concatenate([floor[keep], np.repeat(stuck, 2)])
        idx = np.argsort(lo, kind="stable")
        lo, hi, K, E, depth, floor = lo[idx], hi[idx], K[idx], E[idx], depth[idx], floor[idx]
    return K.sum(axis=0), E.sum(axis=0), converged


def integrate_halves(g: Callable, length, spec: Optional[QuadSpec] = None, *,
                     power: int = 1, abs_tol: Optional[float] = None,
                     rel_tol: Optional[float] = None):
    """Integrate over segments measured from both of their ends.

    Segment ``j`` has length ``length[j]``; it is cut in half and each half
    is integrated in the offset ``d`` from its own end, so the integrand can
    rebuild points near an end without cancellation.  ``g(j, side, d)``
    returns values where ``side`` is 0 for offsets from the start and 1 for
    offsets from the end.

    With ``power=q`` the offset is ``d = (L/2) * tau**q``, which removes
    algebraic end-point singularities whose exponent is a multiple of
    ``1/q``.

    Returns ``(values, errors, converged)`` per segment.
    """
    length = np.atleast_1d(np.asarray(length, dtype=float))
    half = 0.5 * length
    q = int(power)

    def integrand(cidx, tau):
        j = cidx // 2
        side = cidx % 2
        hj = half[j]
        if q == 1:
            d = hj * tau
            jac = hj
        else:
            d = hj * tau ** q
            jac = hj * q * tau ** (q - 1)
        return g(j, side, d) * jac

    M = length.size
    ends = np.where(length > 0, 1.0, 0.0)
    v, e, ok = integrate_many(integrand, np.zeros(2 * M), np.repeat(ends, 2), spec,
                              abs_tol=abs_tol, rel_tol=rel_tol)
    v = v.reshape(M, 2).sum(axis=1)
    e = e.reshape(M, 2).sum(axis=1)
    ok = ok.reshape(M, 2).all(axis=1)
    return v, e, ok


def integrate_line(g: Callable, a: float, b: float, spec: Optional[QuadSpec] = None,
                   points: Optional[Sequence[float]] = None) -> QuadResult:
    """Adaptive integral of ``g`` over ``[a, b]``.

    ``points`` are interior abscissae where ``g`` is known to be non-smooth;
    they become subinterval endpoints so no node lands on them.

    >>> integrate_line(np.exp, 0.0, 1.0).value  # doctest: +ELLIPSIS
    1.71828182845904...
    """
    spec = spec or DEFAULT_SPEC
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("integration limits must be finite")
    cuts = [a]
    for p in sorted(points or ()):
        if min(a, b) < p < max(a, b):
            cuts.append(p)
    cuts.append(b)
    if b < a:
        cuts = [a] + sorted(cuts[1:-1], reverse=True) + [b]
    lo = np.array(cuts[:-1])
    hi = np.array(cuts[1:])

    def wrapped(idx, x):
        return np.broadcast_to(g(x), x.shape)

    v, e, ok = integrate_many(wrapped, lo, hi, spec)
    value = float(v.sum())
    error = float(e.sum())
    tol = max(spec.abs_tol, spec.rel_tol * abs(value))
    return QuadResult(value, error, bool(np.all(ok) or error <= tol))


def integrate_real_line(g: Callable, spec: Optional[QuadSpec] = None,
                        decay_radius: Optional[float] = None) -> QuadResult:
    """Integral of ``g`` over the real line, truncated to ``[-R, R]``.

    ``R`` comes from ``spec.truncation_radius`` (``"auto"`` uses ``decay_radius`` plus a
    margin).  The recorded ``truncation`` is ``2R`` times the largest
    integrand magnitude at the cut points.
    """
    spec = spec or DEFAULT_SPEC
    R = spec.radius(decay_radius)
    res = integrate_line(g, -R, R, spec, points=[0.0])
    edge = np.abs(np.asarray(g(np.array([-R, R])), dtype=float))
    return res._replace(truncation=float(2 * R * edge.max()))


def pv_integral(g: Callable, pole: float, spec: Optional[QuadSpec] = None,
                decay_radius: Optional[float] = None) -> QuadResult:
    """Cauchy principal value of ``∫ g(u) / (pole - u) du``.

    On the symmetric window ``[pole - R, pole + R]`` the constant
    ``g(pole)`` is subtracted; it integrates to zero against the odd kernel,
    and pairing ``pole - d`` with ``pole + d`` leaves the bounded integrand
    ``(g(pole - d) - g(pole + d)) / d``.  Offsets below
    ``1e-8 * max(1, R)`` use the limit ``-2 g'(pole)`` instead.  Whatever
    part of ``[-D, D]`` (``D`` the resolved support radius) lies outside the
    window is integrated directly.
    """
    spec = spec or DEFAULT_SPEC
    pole = float(pole)
    if not math.isfinite(pole):
        raise ValueError("pole must be finite")
    R = spec.radius(decay_radius)
    guard = 1e-8 * max(1.0, R)
    slope = []

    def folded(idx, d):
        gm = np.asarray(g(pole - d), dtype=float)
        gp = np.asarray(g(pole + d), dtype=float)
        out = (gm - gp) / np.where(d < guard, 1.0, d)
        small = d < guard
        if np.any(small):
            if not slope:
                h = 1e-6 * max(1.0, abs(pole))
                g2 = np.asarray(g(np.array([pole - h, pole + h])), dtype=float)
                slope.append((g2[1] - g2[0]) / (2 * h))
            out = np.where(small, -2.0 * slope[0], out)
        return out

    v, e, ok = integrate_many(folded, np.array([0.0]), np.array([R]), spec)
    value, error, conv = float(v[0]), float(e[0]), bool(ok[0])
    D = R if decay_radius is None else spec.radius(decay_radius)
    tails = []
    if -D < pole - R:
        tails.append((-D, pole - R))
    if pole + R < D:
        tails.append((pole + R, D))
    for lo, hi in tails:
        r = integrate_line(lambda u: np.asarray(g(u), dtype=float) / (pole - u), lo, hi, spec)
        value += r.value
        error += r.error
        conv = conv and r.converged
    return QuadResult(value, error, conv)


# ---------------------------------------------------------------------------
# Panel product integration for many poles sharing one density
# ---------------------------------------------------------------------------

def _reference_rule(n):
    x, w = _leg.leggauss(n)
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    bary = 1.0 / np.prod(diff, axis=1)
    bary /= np.max(np.abs(bary))
    D = (bary[None, :] / bary[:, None]) / np.where(np.eye(n, dtype=bool), 1.0, x[:, None] - x[None, :])
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    to_coef = np.linalg.inv(_leg.legvander(x, n - 1))
    return x, w, bary, D, to_coef


_RULES = {}


def _rule(n):
    if n not in _RULES:
        _RULES[n] = _reference_rule(n)
    return _RULES[n]


@dataclass(frozen=True)
class Panels:
    """A density sampled on Gauss-Legendre panels covering ``[breaks[0], breaks[-1]]``.

    The density is represented by its per-panel polynomial interpolant, and
    :meth:`hilbert` integrates that interpolant against ``1/(pole - t)``
    exactly (up to rounding) for any number of poles.
    """

    breaks: np.ndarray
    values: np.ndarray  # (P, n)
    order: int

    @property
    def nodes(self):
        x = _rule(self.order)[0]
        a, b = self.breaks[:-1], self.breaks[1:]
        return 0.5 * (a + b)[:, None] + 0.5 * (b - a)[:, None] * x[None, :]

    @property
    def weights(self):
        w = _rule(self.order)[1]
        return 0.5 * (self.breaks[1:] - self.breaks[:-1])[:, None] * w[None, :]

    def integral(self) -> float:
        return float(np.sum(self.weights * self.values))

    def interpolate(self, t):
        """Evaluate the piecewise interpolant; zero outside the covered range."""
        t = np.asarray(t, dtype=float)
        x, _, bary, _, _ = _rule(self.order)
        a, b = self.breaks[0], self.breaks[-1]
        inside = (t > a) & (t < b)
        out = np.zeros_like(t)
        if not np.any(inside):
            return out
        ti = t[inside]
        k = np.clip(np.searchsorted(self.breaks, ti, side="right") - 1, 0, len(self.breaks) - 2)
        lo, hi = self.breaks[k], self.breaks[k + 1]
        z = (2 * ti - lo - hi) / (hi - lo)
        diff = z[:, None] - x[None, :]
        exact = diff == 0
        diff = np.where(exact, 1.0, diff)
        vals = self.values[k]
        num = np.sum(bary * vals / diff, axis=1)
        den = np.sum(bary / diff, axis=1)
        res = num / den
        hit = exact.any(axis=1)
        if np.any(hit):
            res[hit] = vals[hit][exact[hit]]
        out[inside] = res
        return out

    def hilbert(self, poles, chunk: int = 512):
        """``vp ∫ k(t) / (pole - t) dt`` over the covered range, for each pole."""
        poles = np.asarray(poles, dtype=float)
        flat = poles.ravel()
        t = self.nodes.ravel()
        w = self.weights.ravel()
        v = self.values.ravel()
        a, b = self.breaks[0], self.breaks[-1]
        _, _, _, Dref, _ = _rule(self.order)
        scale = 2.0 / (self.breaks[1:] - self.breaks[:-1])
        dv = (self.values @ Dref.T * scale[:, None]).ravel()
        guard = 1e-8 * max(1.0, b - a)
        c0 = self.interpolate(flat)
        vw = np.column_stack([v * w, w])
        # the only nodes that can sit within the guard of a pole (t is sorted)
        j = np.searchsorted(t, flat)
        left, right = np.maximum(j - 1, 0), np.minimum(j, t.size - 1)
        out = np.empty_like(flat)
        buf = np.empty((min(chunk, flat.size), t.size))
        for s in range(0, flat.size, chunk):
            p = flat[s:s + chunk]
            c = c0[s:s + chunk]
            # sum_j (v_j - c) w_j / (p - t_j), split into two products with 1/(p - t)
            R = np.subtract(p[:, None], t[None, :], out=buf[:p.size])
            with np.errstate(divide="ignore"):
                np.reciprocal(R, out=R)
            rows, cols = [], []
            lj, rj = left[s:s + chunk], right[s:s + chunk]
            for jj, extra in ((lj, True), (rj, rj != lj)):
                hit = (np.abs(p - t[jj]) < guard) & extra
                rows.append(np.flatnonzero(hit))
                cols.append(jj[hit])
            rows, cols = np.concatenate(rows), np.concatenate(cols)
            R[rows, cols] = 0.0
            A = R @ vw
            r = A[:, 0] - c * A[:, 1]
            # at a coincident node the difference quotient is -k'(t_j)
            np.add.at(r, rows, -dv[cols] * w[cols])
            inside = (p > a) & (p < b)
            with np.errstate(divide="ignore"):
                logs = np.where(inside, np.log(np.abs(p - a)) - np.log(np.abs(b - p)), 0.0)
            out[s:s + chunk] = r + c * logs
        return out.reshape(poles.shape)


def build_panels(k: Callable, a: float, b: float, spec: Optional[QuadSpec] = None, *,
                 order: int = 16, n_initial: int = 8, breaks: Optional[np.ndarray] = None,
                 adaptive: bool = True, abs_tol: Optional[float] = None,
                 max_level: int = 40, max_panels: int = 4096) -> Panels:
    """Sample ``k`` on Gauss-Legendre panels, splitting until it is resolved.

    A panel is accepted when its two highest Legendre coefficients are below
    ``max(abs_tol, rel_tol * max|k|)``.  ``k`` is called once per refinement
    round with every new node, so it may batch expensive work.
    """
    spec = spec or DEFAULT_SPEC
    atol = spec.abs_tol if abs_tol is None else abs_tol
    x, _, _, _, to_coef = _rule(order)
    if breaks is None:
        breaks = np.linspace(a, b, n_initial + 1)
    breaks = np.asarray(breaks, dtype=float)
    lo, hi = breaks[:-1], breaks[1:]
    level = np.zeros(lo.size, dtype=int)
    done_lo, done_hi, done_v = [], [], []
    scale = 0.0
    while lo.size:
        nodes = 0.5 * (lo + hi)[:, None] + 0.5 * (hi - lo)[:, None] * x[None, :]
        vals = np.asarray(k(nodes.ravel()), dtype=float).reshape(lo.size, order)
        scale = max(scale, float(np.max(np.abs(vals))) if vals.size else 0.0)
        if not adaptive:
            done_lo.append(lo)
            done_hi.append(hi)
            done_v.append(vals)
            break
        coef = vals @ to_coef.T
        tail = np.abs(coef[:, -1]) + np.abs(coef[:, -2])
        tol = max(atol, spec.rel_tol * scale)
        ok = (tail <= tol) | (level >= max_level) | ~np.all(np.isfinite(vals), axis=1)
        if sum(map(len, done_lo)) + 2 * np.count_nonzero(~ok) > max_panels:
            ok[:] = True
        done_lo.append(lo[ok])
        done_hi.append(hi[ok])
        done_v.append(vals[ok])
        mid = 0.5 * (lo + hi)
        keep = ~ok
        lo = np.column_stack([lo[keep], mid[keep]]).ravel()
        hi = np.column_stack([mid[keep], hi[keep]]).ravel()
        level = np.repeat(level[keep] + 1, 2)
    lo = np.concatenate(done_lo)
    hi = np.concatenate(done_hi)
    vals = np.concatenate(done_v)
    order_idx = np.argsort(lo, kind="stable")
    lo, hi, vals = lo[order_idx], hi[order_idx], vals[order_idx]
    return Panels(np.append(lo, hi[-1]), vals, order)
