"""Reduced fields that turn the curve transforms into X-ray transforms.

Substituting ``xi = X|X|^(alpha-1)`` (``X = x - c``) straightens the curves
of the Q, P and R transforms into lines.  The resulting fields are

* ``F(xi, eta)  = f(sign(xi)|xi|^(1/alpha) + c, eta) / (alpha |xi|^((alpha-1)/alpha))``
* ``FP(xi, eta) = 2 F(xi, eta)`` for ``xi > 0``, else 0
* ``FR(xi, eta) = 2 f(xi^(1/alpha) + c, eta^(1/beta)) / (alpha xi^((alpha-1)/alpha) eta^(1/beta))``
  for ``xi, eta > 0``, else 0

and for ``theta = pi/2 + arctan(s)`` (the ``(0, pi)`` branch of
``arccot(-s)``)::

    T f(s, u)    = (1+s^2)^(-1/2) X[F](theta, u / sqrt(1+s^2))
    d_u T f(s,u) = (1+s^2)^(-1)   d_t X[F](theta, u / sqrt(1+s^2))

with ``T`` one of Q, P, R paired with F, FP, FR.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np

from .core import TransformParams
from .forward import rational_part, transform_batch
from .phantoms import SPACE_RANK, AnalyticField
from .quadrature import QuadSpec, integrate_line

__all__ = [
    "ReducedField",
    "IdentityCheck",
    "arccot_neg",
    "boundary_limit",
    "decay_witness",
    "limit_gaps",
    "recover",
    "reduce",
    "reduction_sides",
    "verify_reduction_identity",
]

KIND_FOR = {"Q": "F", "P": "FP", "R": "FR"}
REQUIRED_TAG = {"F": "S", "FP": "SP", "FR": "SR"}
V_DELTA = 1e-6


def arccot_neg(s):
    """``arccot(-s)`` on the branch ``(0, pi)``, increasing in ``s``."""
    return 0.5 * np.pi + np.arctan(s)


def _is_critical(p: TransformParams) -> bool:
    """True when the vanishing order sits exactly at ``m = alpha - 2``."""
    return float(p.m) == float(p.alpha) - 2.0


class ReducedField:
    """Evaluator for ``F``, ``FP`` or ``FR`` built from an analytic field.

    On ``xi = 0`` the value is the two-sided limit 0 when ``m > alpha - 2``
    and the ``xi -> 0+`` limit otherwise (``limit_side`` records which).
    """

    def __init__(self, source: AnalyticField, kind: str):
        if kind not in REQUIRED_TAG:
            raise ValueError(f"unknown reduced-field kind {kind!r}")
        need = REQUIRED_TAG[kind]
        if not source.is_zero:
            tag = source.space_tag
            if tag is None or SPACE_RANK[tag] < SPACE_RANK[need]:
                raise ValueError(f"kind {kind} needs a field tagged {need} or stronger, got {tag}")
        self.kind = kind
        self.source = source
        self.params = source.params
        self.alpha = float(source.params.alpha)
        self.beta = float(source.params.beta)
        self.critical = _is_critical(source.params)
        self.limit_side = "+" if self.critical else "both"

    # -- geometry used by the X-ray integrator ---------------------------
    @property
    def box(self) -> Tuple[float, float, float, float]:
        a = self.alpha
        xlo, xhi = self.source.x_window
        ylo, yhi = self.source.y_window
        if self.kind == "F":
            return (-(max(-xlo, 0.0) ** a), max(xhi, 0.0) ** a, ylo, yhi)
        # the box reaches past the kink lines so their crossings become
        # interior cut points with exact coordinates
        if self.kind == "FP":
            return (-1.0, max(xhi, 0.0) ** a, ylo, yhi)
        top = max(abs(ylo), abs(yhi))
        return (-1.0, max(xhi, 0.0) ** a, -1.0, top ** self.beta)

    @property
    def kinks_x(self):
        return (0.0,)

    @property
    def kinks_y(self):
        return (0.0,) if self.kind == "FR" else ()

    @property
    def power(self) -> int:
        q = rational_part(self.alpha, "num")
        if self.kind == "FR":
            q = math.lcm(q, rational_part(self.beta, "num"))
        return min(q, 12)

    @property
    def is_zero(self) -> bool:
        return self.source.is_zero

    # -- evaluation --------------------------------------------------------
    def _X(self, xi):
        return np.sign(xi) * np.abs(xi) ** (1.0 / self.alpha)

    def _v(self, eta):
        return np.maximum(eta, 0.0) ** (1.0 / self.beta)

    def __call__(self, xi, eta):
        xi, eta = np.broadcast_arrays(np.asarray(xi, dtype=float), np.asarray(eta, dtype=float))
        a = self.alpha
        f = self.source.local
        ax = np.abs(xi)
        nz = ax > 0
        axs = np.where(nz, ax, 1.0)
        X = self._X(xi)
        den = a * axs ** ((a - 1.0) / a)
        if self.kind == "FR":
            v = self._v(eta)
            vs = np.where(v > V_DELTA, v, 1.0)
            q = np.where(v > V_DELTA, f(0, 0, X, v) / vs, f(0, 1, X, 0.0 * X))
            out = np.where((xi > 0) & (eta > 0), 2.0 * q / den, 0.0)
        else:
            out = f(0, 0, X, eta) / den
            if self.kind == "FP":
                out = np.where(xi > 0, 2.0 * out, 0.0)
        if np.any(~nz):
            out = np.where(nz, out, self.axis_value(eta))
        return out

    def axis_value(self, eta):
        """Value assigned on ``xi = 0`` (see class docstring)."""
        eta = np.asarray(eta, dtype=float)
        if not self.critical:
            return np.zeros_like(eta)
        return self._limit_plus(eta)

    def _limit_plus(self, eta):
        m = int(self.params.m)
        k = math.factorial(m + 2)
        f = self.source.local
        z = np.zeros_like(eta)
        if self.kind == "F":
            return f(m + 1, 0, z, eta) / k
        if self.kind == "FP":
            return 2.0 * f(m + 1, 0, z, eta) / k
        v = self._v(eta)
        vs = np.where(v > V_DELTA, v, 1.0)
        # int_0^1 g_y(tau v) dtau = g(v)/v since g(0) = 0 on the x-axis
        q = np.where(v > V_DELTA, f(m + 1, 0, z, v) / vs, f(m + 1, 1, z, z))
        return np.where(eta > 0, 2.0 * q / k, 0.0)

    def jump_x(self, eta):
        """``F(0+, eta) - F(0-, eta)``; nonzero only when ``m = alpha - 2``."""
        eta = np.asarray(eta, dtype=float)
        if not self.critical:
            return np.zeros_like(eta)
        plus = self._limit_plus(eta)
        if self.kind == "F":
            m = int(self.params.m)
            return plus * (1.0 - (-1.0) ** (m + 1))
        return plus

    def gradient(self, xi, eta):
        """``(dF/dxi, dF/deta)`` away from the kink lines (0 on them)."""
        xi, eta = np.broadcast_arrays(np.asarray(xi, dtype=float), np.asarray(eta, dtype=float))
        a = self.alpha
        f = self.source.local
        ax = np.abs(xi)
        nz = ax > 0
        axs = np.where(nz, ax, 1.0)
        sg = np.sign(xi)
        X = self._X(xi)
        p1 = axs ** ((a - 1.0) / a)
        if self.kind == "FR":
            beta = self.beta
            v = self._v(eta)
            big = v > V_DELTA
            vs = np.where(big, v, 1.0)
            es = np.where(eta > 0, eta, 1.0)
            fv = f(0, 0, X, v)
            fy = f(0, 1, X, v)
            fx = f(1, 0, X, v)
            fxy = f(1, 1, X, 0.0 * X)
            q = np.where(big, fv / vs, f(0, 1, X, 0.0 * X))
            qx = np.where(big, fx / vs, fxy)
            gx = 2.0 * (qx / (a * a * axs ** (2 * (a - 1) / a))
                        - (a - 1) / (a * a) * q / axs ** ((2 * a - 1) / a))
            dq = np.where(big, (fy * v - fv) / (vs * vs), 0.5 * f(0, 2, X, 0.0 * X))
            gy = 2.0 / (a * p1) * dq * v / (beta * es)
            inside = (xi > 0) & (eta > 0)
            return np.where(inside, gx, 0.0), np.where(inside, gy, 0.0)
        fv = f(0, 0, X, eta)
        gx = (f(1, 0, X, eta) / (a * a * axs ** (2 * (a - 1) / a))
              - (a - 1) / (a * a) * sg * fv / axs ** ((2 * a - 1) / a))
        gy = f(0, 1, X, eta) / (a * p1)
        gx = np.where(nz, gx, 0.0)
        gy = np.where(nz, gy, 0.0)
        if self.kind == "FP":
            return np.where(xi > 0, 2.0 * gx, 0.0), np.where(xi > 0, 2.0 * gy, 0.0)
        return gx, gy

    def __repr__(self):
        return f"ReducedField({self.kind}, {self.source!r})"


def reduce(f: AnalyticField, kind: str) -> ReducedField:
    """Build ``F``, ``FP`` or ``FR`` from ``f`` (which must be tagged S, SP or SR accordingly)."""
    return ReducedField(f, kind)


def recover(F: ReducedField, x, y):
    """Rebuild ``f(x, y)`` from a reduced field; 0 on the axis ``x = c``."""
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    p = F.params
    a = F.alpha
    X = x - p.c
    aX = np.abs(X)
    on_axis = aX == 0
    aXs = np.where(on_axis, 1.0, aX)
    w = a * aXs ** (a - 1.0)
    if F.kind == "F":
        out = w * F(X * aXs ** (a - 1.0), y)
    elif F.kind == "FP":
        out = 0.5 * w * F(aXs ** a, y)
    else:
        ay = np.abs(y)
        out = 0.5 * w * ay * F(aXs ** a, ay ** F.beta)
    return np.where(on_axis, 0.0, out)


def boundary_limit(F: ReducedField, side: str, s: float, u: float,
                   spec: Optional[QuadSpec] = None) -> float:
    """Closed-form limit of ``F(xi, s*xi + u)`` as ``xi -> 0`` from ``side`` (``"+"`` or ``"-"``).

    For ``FR`` the limit contains ``int_0^1 d^(m+2)f/dx^(m+1)dy (c, tau u^(1/beta)) dtau``,
    which is computed by quadrature here.  Its prefactor is ``2/(m+2)!``,
    the factor 2 coming from the definition of ``FR``.
    """
    if side not in ("+", "-"):
        raise ValueError("side must be '+' or '-'")
    if not F.critical:
        return 0.0
    m = int(F.params.m)
    k = math.factorial(m + 2)
    f = F.source.local
    sign = 1.0 if side == "+" else -1.0
    if F.kind == "F":
        return float(sign ** (m + 1) * f(m + 1, 0, 0.0, u) / k)
    if side == "-":
        return 0.0
    if F.kind == "FP":
        return float(2.0 * f(m + 1, 0, 0.0, u) / k)
    if u <= 0:
        return 0.0
    v = u ** (1.0 / F.beta)
    r = integrate_line(lambda tau: f(m + 1, 1, 0.0 * tau, tau * v), 0.0, 1.0,
                       spec or QuadSpec(rel_tol=1e-12, abs_tol=1e-15))
    return 2.0 * r.value / k


def limit_gaps(F: ReducedField, side: str, s: float, u: float, exponents=range(2, 7)):
    """``|F(xi, s xi + u) - limit|`` for ``xi = +-10^-k``."""
    lim = boundary_limit(F, side, s, u)
    sg = 1.0 if side == "+" else -1.0
    xi = sg * 10.0 ** -np.asarray(list(exponents), dtype=float)
    return np.abs(F(xi, s * xi + u) - lim)


class DecayWitness(NamedTuple):
    bound: float       # max |F| (1+|xi|+|eta|)^N over the sample
    tail: float        # same maximum restricted to the outer decade
    growth_free: bool  # tail does not exceed the overall bound


def decay_witness(F: ReducedField, N: int = 4, lo: float = 1e-3, hi: float = 1e2,
                  n: int = 31) -> DecayWitness:
    """Numerical witness of ``|F| <= C (1+|xi|+|eta|)^-N`` on a log-spaced grid."""
    mag = np.geomspace(lo, hi, n)
    axis = np.concatenate([-mag[::-1], mag])
    XI, ETA = np.meshgrid(axis, axis)
    r = 1.0 + np.abs(XI) + np.abs(ETA)
    w = np.abs(F(XI, ETA)) * r ** N
    bound = float(w.max())
    tail = float(w[r >= hi / 10.0].max())
    return DecayWitness(bound, tail, tail <= bound)


class IdentityCheck(NamedTuple):
    max_residual: float
    lhs: np.ndarray
    rhs: np.ndarray


def reduction_sides(f: AnalyticField, kind: str, s, u, spec: Optional[QuadSpec] = None,
                    derivative: bool = False, dt_mode: str = "exact") -> IdentityCheck:
    """Both sides of the reduction identity (or its u-derivative) at samples ``(s, u)``.

    The left side is the curve transform of ``f`` computed directly, the
    right side the X-ray transform of the reduced field.
    """
    from .xray import xray_batch

    s, u = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(u, dtype=float))
    F = reduce(f, KIND_FOR[kind])
    lhs, _, _ = transform_batch(kind, f, f.params, s, u, spec, derivative)
    root = np.sqrt(1.0 + s * s)
    theta = arccot_neg(s)
    t = u / root
    xv, _, _ = xray_batch(F, theta, t, spec, derivative=derivative, mode=dt_mode)
    rhs = xv / (root * root if derivative else root)
    res = float(np.max(np.abs(lhs - rhs))) if lhs.size else 0.0
    return IdentityCheck(res, lhs, rhs)


def verify_reduction_identity(f: AnalyticField, kind: str, s, u, spec: Optional[QuadSpec] = None,
                              derivative: bool = False) -> float:
    """Max ``|LHS - RHS|`` of the reduction identity over the given samples."""
    return reduction_sides(f, kind, s, u, spec, derivative).max_residual
