"""Closed-form test fields with exact partial derivatives.

A field is a finite sum of separable Gaussian-envelope terms

    coef * Px(X) * exp(-((X - a)/wx)^2) * Py(y) * exp(-((y - b)/wy)^2),   X = x - c,

so every mixed partial is again of this form and can be evaluated exactly.
The built-in families vanish to a prescribed order on the axis ``x = c`` and
carry the symmetries needed by the P and R transforms:

* ``S``:  X^(m+1) exp(-X^2 - (y-b)^2)
* ``SP``: X^(2a) exp(-X^2 - (y-b)^2), 2a the smallest even integer >= m+1
* ``SR``: X^(2a) y^2 exp(-X^2 - y^2)
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as npoly

from .core import TransformParams, validate_params
from .quadrature import QuadSpec, integrate_many

__all__ = [
    "AnalyticField",
    "MembershipReport",
    "Term",
    "check_membership",
    "gaussian",
    "make_phantom",
    "SPACE_RANK",
]

SPACE_RANK = {"S": 0, "SP": 1, "SR": 2}
FAMILIES = ("S", "SP", "SR")
DECAY_EPS = 1e-14


@dataclass(frozen=True)
class Term:
    """One separable term; polynomials are coefficient tuples in ascending order."""

    coef: float
    px: Tuple[float, ...]
    ax: float
    wx: float
    py: Tuple[float, ...]
    by: float
    wy: float

    def reflect_x(self) -> "Term":
        px = tuple(c * (-1) ** k for k, c in enumerate(self.px))
        return Term(self.coef, px, -self.ax, self.wx, self.py, self.by, self.wy)

    def scaled(self, k: float) -> "Term":
        return Term(self.coef * k, self.px, self.ax, self.wx, self.py, self.by, self.wy)


def _derivs(p, center, width, kmax):
    """Polynomials q_k with d^k/dz^k [p(z) e^{-((z-center)/width)^2}] = q_k(z) e^{...}."""
    out = [np.asarray(p, dtype=float)]
    lin = np.array([-center, 1.0]) * (2.0 / width ** 2)
    for _ in range(kmax):
        q = out[-1]
        out.append(npoly.polysub(npoly.polyder(q) if q.size > 1 else np.zeros(1),
                                 npoly.polymul(lin, q)))
    return out


def _envelope_radius(p, center, width, bound, eps):
    """Distance beyond which ``bound * |p(z)| e^{-((z-center)/w)^2}`` stays below ``eps``.

    Uses ``|p(z)| <= A |z|^d`` for ``|z| >= 1`` and solves
    ``r = |center| + w sqrt(ln(A bound/eps) + d ln r)`` by fixed-point iteration.
    """
    p = np.trim_zeros(np.asarray(p, dtype=float), "b")
    if p.size == 0 or bound == 0:
        return 0.0
    A = float(np.sum(np.abs(p))) * bound
    d = p.size - 1
    r = max(1.0, abs(center) + width * math.sqrt(max(math.log(A / eps), 0.0)))
    for _ in range(100):
        r_new = abs(center) + width * math.sqrt(max(math.log(A / eps) + d * math.log(r), 0.0))
        r_new = max(r_new, 1.0)
        if abs(r_new - r) < 1e-12:
            break
        r = r_new
    return r


def _sup(p, center, width):
    z = np.linspace(center - 12 * width, center + 12 * width, 4801)
    v = np.abs(npoly.polyval(z, p)) * np.exp(-((z - center) / width) ** 2)
    return 1.05 * float(v.max()) if v.size else 0.0


class AnalyticField:
    """A finite sum of separable Gaussian-envelope terms.

    Parameters
    ----------
    terms : sequence of Term
    params : TransformParams
        Axis offset ``c`` and the vanishing order ``m`` the field claims.
    space_tag : {"S", "SP", "SR"} or None
        Claimed function space; ``None`` for plain rapidly decaying fields.
    validate : bool
        When False the claimed membership is not enforced, which is how the
        counterexamples used by the membership checks are built.
    """

    def __init__(self, terms: Sequence[Term], params: TransformParams,
                 space_tag: Optional[str] = None, *, validate: bool = True, name: str = ""):
        if validate:
            validate_params(params)
        if space_tag is not None and space_tag not in SPACE_RANK:
            raise ValueError(f"unknown space tag {space_tag!r}")
        self.terms: Tuple[Term, ...] = tuple(t for t in terms if t.coef != 0)
        self.params = params
        self.space_tag = space_tag
        self.name = name
        self._cache: Dict[Tuple[int, int, int], Tuple[np.ndarray, np.ndarray]] = {}
        self._windows()

    # -- geometry ---------------------------------------------------------
    def _windows(self):
        xlo = ylo = math.inf
        xhi = yhi = -math.inf
        n = max(len(self.terms), 1)
        for t in self.terms:
            ysup = _sup(t.py, t.by, t.wy)
            xsup = _sup(t.px, t.ax, t.wx)
            # radii are measured from the envelope peaks
            rx = _envelope_radius(_shift(t.px, t.ax), 0.0, t.wx, abs(t.coef) * ysup, DECAY_EPS / n)
            ry = _envelope_radius(_shift(t.py, t.by), 0.0, t.wy, abs(t.coef) * xsup, DECAY_EPS / n)
            xlo, xhi = min(xlo, t.ax - rx), max(xhi, t.ax + rx)
            ylo, yhi = min(ylo, t.by - ry), max(yhi, t.by + ry)
        if not self.terms:
            xlo = xhi = ylo = yhi = 0.0
        self.x_window = (xlo, xhi)  # in X = x - c
        self.y_window = (ylo, yhi)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def x_radius(self) -> float:
        return max(abs(self.x_window[0]), abs(self.x_window[1]))

    @property
    def y_radius(self) -> float:
        return max(abs(self.y_window[0]), abs(self.y_window[1]))

    @property
    def decay_radius(self) -> float:
        """Half-width of an origin-centred square outside which ``|f| < 1e-14``."""
        c = self.params.c
        r = max(abs(c + self.x_window[0]), abs(c + self.x_window[1]), self.y_radius)
        return max(r, 1e-3)

    # -- evaluation -------------------------------------------------------
    def _polys(self, i, kx, ky):
        key = (i, kx, ky)
        if key not in self._cache:
            t = self.terms[i]
            qx = _derivs(t.px, t.ax, t.wx, kx)[kx]
            qy = _derivs(t.py, t.by, t.wy, ky)[ky]
            self._cache[key] = (qx, qy)
        return self._cache[key]

    def local(self, kx: int, ky: int, X, y):
        """``d^(kx+ky) f / dx^kx dy^ky`` at ``(c + X, y)`` given the offset ``X``."""
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.zeros(np.broadcast(X, y).shape)
        for i, t in enumerate(self.terms):
            qx, qy = self._polys(i, kx, ky)
            ex = np.exp(-((X - t.ax) / t.wx) ** 2)
            ey = np.exp(-((y - t.by) / t.wy) ** 2)
            out = out + t.coef * (npoly.polyval(X, qx) * ex) * (npoly.polyval(y, qy) * ey)
        return out

    def partial(self, kx: int, ky: int, x, y):
        return self.local(kx, ky, np.asarray(x, dtype=float) - self.params.c, y)

    def __call__(self, x, y):
        return self.partial(0, 0, x, y)

    eval = __call__

    def d_dy(self, x, y):
        return self.partial(0, 1, x, y)

    def dk_dxk(self, k: int, x, y):
        return self.partial(k, 0, x, y)

    def gradient(self, x, y):
        return self.partial(1, 0, x, y), self.partial(0, 1, x, y)

    # -- algebra ----------------------------------------------------------
    def _combine(self, other: "AnalyticField", sign: float) -> "AnalyticField":
        if other.params.c != self.params.c:
            raise ValueError("fields with different axis offsets cannot be combined")
        tags = [t for t in (self.space_tag, other.space_tag)]
        tag = None if None in tags else min(tags, key=SPACE_RANK.get)
        p = self.params if self.params.m <= other.params.m else other.params
        terms = list(self.terms) + [t.scaled(sign) for t in other.terms]
        return AnalyticField(terms, p, tag, validate=False, name=f"{self.name}{'+-'[sign < 0]}{other.name}")

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __mul__(self, k: float):
        return AnalyticField([t.scaled(k) for t in self.terms], self.params, self.space_tag,
                             validate=False, name=self.name)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def reflected(self) -> "AnalyticField":
        """``(x, y) -> f(2c - x, y)``, the mirror image about the axis."""
        return AnalyticField([t.reflect_x() for t in self.terms], self.params, None,
                             validate=False, name=f"mirror({self.name})")

    def even_part(self) -> "AnalyticField":
        """``(f(x+c, y) + f(-x+c, y)) / 2`` as a field; tagged SP when ``f`` is in S."""
        terms = [t.scaled(0.5) for t in self.terms] + [t.reflect_x().scaled(0.5) for t in self.terms]
        tag = None if self.space_tag is None else max(self.space_tag, "SP", key=SPACE_RANK.get)
        return AnalyticField(terms, self.params, tag, validate=False, name=f"even({self.name})")

    def odd_part(self) -> "AnalyticField":
        terms = [t.scaled(0.5) for t in self.terms] + [t.reflect_x().scaled(-0.5) for t in self.terms]
        tag = None if self.space_tag is None else "S"
        return AnalyticField(terms, self.params, tag, validate=False, name=f"odd({self.name})")

    @classmethod
    def zero(cls, params: TransformParams = TransformParams(), space_tag: str = "SR"):
        return cls([], params, space_tag, name="zero")

    def __repr__(self):
        p = self.params
        return (f"AnalyticField({self.name or 'custom'}, tag={self.space_tag}, alpha={p.alpha}, "
                f"beta={p.beta}, c={p.c}, m={p.m}, terms={len(self.terms)})")


def _shift(p, a):
    """Coefficients of ``z -> p(z + a)``."""
    p = np.asarray(p, dtype=float)
    out = np.zeros(1)
    base = np.array([a, 1.0])
    for coef in p[::-1]:
        out = npoly.polyadd(npoly.polymul(out, base), [coef])
    return out


def _monomial(k: int) -> Tuple[float, ...]:
    return tuple([0.0] * k + [1.0])


def make_phantom(family: str, p: TransformParams, amplitude: float = 1.0, shift: float = 0.0,
                 width: float = 1.0, space: Optional[str] = None) -> AnalyticField:
    """Build a built-in phantom.

    Parameters
    ----------
    family : {"S", "SP", "SR"}
    p : TransformParams
    amplitude, width : float
        Overall factor and Gaussian width (both axes).
    shift : float
        Centre ``b`` of the y-envelope; must be 0 for ``SR``.
    space : str, optional
        Space to tag the field with, defaults to ``family``.  A family can
        be tagged with a larger space (``SP`` is also in ``S``) but not a
        smaller one.

    Examples
    --------
    >>> f = make_phantom("S", TransformParams(alpha=2, m=1))
    >>> round(float(f(1.0, 0.0)), 6)
    0.367879
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown phantom family {family!r}; choose from {FAMILIES}")
    validate_params(p)
    space = family if space is None else space
    if space not in SPACE_RANK:
        raise ValueError(f"unknown space tag {space!r}")
    if SPACE_RANK[family] < SPACE_RANK[space]:
        raise ValueError(f"family {family} does not lie in space {space}")
    if not (width > 0 and math.isfinite(width)):
        raise ValueError("width must be positive")
    if family == "SR" and shift != 0:
        raise ValueError("the SR family must be even in y; shift has to be 0")
    if family == "S":
        px = _monomial(p.m + 1)
    else:
        px = _monomial(2 * math.ceil((p.m + 1) / 2))
    py = _monomial(2) if family == "SR" else (1.0,)
    term = Term(float(amplitude), px, 0.0, float(width), py, float(shift), float(width))
    return AnalyticField([term], p, space, name=family)


def gaussian(amplitude: float = 1.0, center: Tuple[float, float] = (0.0, 0.0),
             width: float = 1.0) -> AnalyticField:
    """``amplitude * exp(-((x-x0)^2 + (y-y0)^2)/width^2)``, with no space tag."""
    term = Term(float(amplitude), (1.0,), float(center[0]), float(width), (1.0,),
                float(center[1]), float(width))
    return AnalyticField([term], TransformParams(), None, name="gaussian")


# ---------------------------------------------------------------------------
# membership checks
# ---------------------------------------------------------------------------

@dataclass
class MembershipReport:
    """Maximum residual of each check; ``passed`` compares them against ``tol``."""

    residuals: Dict[str, float]
    tol: float
    fd_tol: float = 1e-6
    failures: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def as_text(self) -> str:
        lines = [f"{'check':<16} {'max residual':>14}  status"]
        for k, v in self.residuals.items():
            lines.append(f"{k:<16} {v:14.3e}  {'FAIL' if k in self.failures else 'ok'}")
        return "\n".join(lines)


FD4 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
FD_STEP = 1e-4


def _fd_first(g, X, y, h=FD_STEP):
    return sum(w * g(X + (k - 2) * h, y) for k, w in enumerate(FD4) if w) / h


def check_membership(f: AnalyticField, tol: float = 1e-9, n_points: int = 25, seed: int = 0,
                     fd_tol: float = 1e-6) -> MembershipReport:
    """Numerically verify that ``f`` belongs to its tagged space.

    Checks, each reported as a maximum absolute residual:

    ``vanishing_exact``
        ``d^k f/dx^k (c, y)`` for ``k <= m`` from the exact closures.
    ``vanishing_fd``
        the same derivatives estimated by central differences.
    ``derivative_fd``
        ``|FD - exact|`` for ``k <= m+1``; the order-4 first-derivative
        stencil with step ``1e-4`` is applied to the exact ``(k-1)``-th
        derivative, which keeps rounding at ``eps/h``.
    ``taylor``
        ``f(x+c, y) - x^(m+1)/m! int_0^1 (1-t)^m d^(m+1)f/dx^(m+1)(tx+c, y) dt``.
    ``mean_value``, ``taylor_mixed`` (SR only)
        ``f - y int_0^1 f_y(x, tau y) dtau`` and the mixed double-integral
        remainder in ``x`` and ``y``.
    ``even_x``, ``even_y``, ``zero_on_x_axis``
        symmetry residuals on a 64x64 sample of the window (SP, SR).

    Sample points are drawn from the field's decay window with ``seed``.
    """
    p = f.params
    m = int(p.m)
    rng = np.random.default_rng(seed)
    res: Dict[str, float] = {}
    ylo, yhi = f.y_window
    xlo, xhi = f.x_window
    if f.is_zero:
        ylo, yhi, xlo, xhi = -1.0, 1.0, -1.0, 1.0
    ys = np.linspace(ylo, yhi, 41)
    zero = np.zeros_like(ys)

    res["vanishing_exact"] = max(float(np.max(np.abs(f.local(k, 0, zero, ys)))) for k in range(m + 1))
    vfd = [float(np.max(np.abs(f.local(0, 0, zero, ys))))]
    dfd = [0.0]
    for k in range(1, m + 2):
        prev = lambda X, y, k=k: f.local(k - 1, 0, X, y)
        est = _fd_first(prev, zero, ys)
        if k <= m:
            vfd.append(float(np.max(np.abs(est))))
        dfd.append(float(np.max(np.abs(est - f.local(k, 0, zero, ys)))))
    res["vanishing_fd"] = max(vfd)
    res["derivative_fd"] = max(dfd)

    X = rng.uniform(xlo, xhi, n_points)
    Y = rng.uniform(ylo, yhi, n_points)
    spec = QuadSpec(rel_tol=1e-11, abs_tol=1e-15)
    direct = f.local(0, 0, X, Y)

    def remainder(idx, t):
        return (1 - t) ** m * f.local(m + 1, 0, t * X[idx], Y[idx])

    v, _, _ = integrate_many(remainder, np.zeros(n_points), np.ones(n_points), spec)
    res["taylor"] = float(np.max(np.abs(direct - X ** (m + 1) / math.factorial(m) * v)))

    if f.space_tag == "SR":
        def mean_value(idx, tau):
            return f.local(0, 1, X[idx], tau * Y[idx])

        v, _, _ = integrate_many(mean_value, np.zeros(n_points), np.ones(n_points), spec)
        res["mean_value"] = float(np.max(np.abs(direct - Y * v)))

        def inner(idx, tau):
            tt = np.asarray(tau)

            def g(j, t):
                return (1 - t) ** m * f.local(m + 1, 1, t * X[idx[j]], tt[j] * Y[idx[j]])

            w, _, _ = integrate_many(g, np.zeros(tt.size), np.ones(tt.size), spec)
            return w

        v, _, _ = integrate_many(inner, np.zeros(n_points), np.ones(n_points), spec)
        res["taylor_mixed"] = float(np.max(np.abs(direct - X ** (m + 1) * Y / math.factorial(m) * v)))

    if f.space_tag in ("SP", "SR"):
        r = max(f.x_radius, 1e-3)
        Xs, Ys = np.meshgrid(np.linspace(-r, r, 64), np.linspace(ylo, yhi, 64))
        res["even_x"] = float(np.max(np.abs(f.local(0, 0, Xs, Ys) - f.local(0, 0, -Xs, Ys))))
        if f.space_tag == "SR":
            s = max(f.y_radius, 1e-3)
            Xs, Ys = np.meshgrid(np.linspace(-r, r, 64), np.linspace(-s, s, 64))
            res["even_y"] = float(np.max(np.abs(f.local(0, 0, Xs, Ys) - f.local(0, 0, Xs, -Ys))))
            res["zero_on_x_axis"] = float(np.max(np.abs(f.local(0, 0, Xs[0], 0.0))))

    failures = [k for k, v in res.items() if v > (fd_tol if k == "derivative_fd" else tol)]
    return MembershipReport(res, tol, fd_tol, failures)
