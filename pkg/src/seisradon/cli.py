"""Command-line driver: ``seisradon <subcommand> ...``.

Subcommands
-----------
phantom   rasterize a built-in phantom (plus a membership-check sidecar)
forward   sample a P, Q or R transform into a sinogram file
invert    reconstruct a grid from an oracle field or a sinogram file
xray      ``xray forward`` / ``xray invert`` for the classical X-ray transform
verify    residual table for the reduction, derivative, limit and decay checks
compare   error metrics between two grid files

Exit status is 0 on success, 1 when a ``verify`` check fails and 2 for
invalid parameters or unreadable input.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from .core import (FORMATS, Grid2, GridFormatError, ParameterError, TransformParams, read_grid,
                   read_sinogram, read_xray, validate_params, write_grid, write_sinogram,
                   write_xray)
from .forward import default_s_axis, default_u_axis, forward_grid
from .inversion import HullError, InversionJob, invert
from .phantoms import check_membership, gaussian, make_phantom
from .quadrature import DEFAULT_SPEC, QuadSpec
from .reduction import KIND_FOR, boundary_limit, decay_witness, reduce, reduction_sides
from .xray import XrayData, XrayOracle, default_xray_axes, xray_forward_grid, xray_invert_grid

FAMILY_FOR = {"Q": "S", "P": "SP", "R": "SR"}
IDENTITIES = ("radon1", "radon2", "radon3", "derivative1", "derivative2", "derivative3",
              "limits", "decay")
IDENTITY_KIND = {"1": "Q", "2": "P", "3": "R"}
THRESHOLDS = {"radon": 1e-6, "derivative": 1e-5, "limits": 1e-3}
LIMIT_XI = 1e-6


class CliError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument helpers
# ---------------------------------------------------------------------------

def _floats(text: str, n: int, what: str) -> List[float]:
    parts = [p for p in text.replace(" ", "").split(",") if p]
    if len(parts) != n:
        raise argparse.ArgumentTypeError(f"{what} needs {n} comma-separated numbers, got {text!r}")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{what}: non-numeric entry in {text!r}") from None


def grid_arg(text: str):
    nx, ny, x0, y0, dx, dy = _floats(text, 6, "grid")
    if nx != int(nx) or ny != int(ny):
        raise argparse.ArgumentTypeError("grid sizes nx, ny must be integers")
    return (int(nx), int(ny), x0, y0, dx, dy)


def axis_arg(text: str) -> np.ndarray:
    lo, hi, n = _floats(text, 3, "axis")
    if n != int(n) or n < 1 or not hi >= lo:
        raise argparse.ArgumentTypeError(f"axis {text!r} must be 'lo,hi,n' with hi >= lo and n >= 1")
    return np.linspace(lo, hi, int(n))


def _add_spec(p: argparse.ArgumentParser):
    g = p.add_argument_group("quadrature")
    g.add_argument("--rel-tol", type=float, default=DEFAULT_SPEC.rel_tol)
    g.add_argument("--abs-tol", type=float, default=DEFAULT_SPEC.abs_tol)
    g.add_argument("--max-depth", type=int, default=DEFAULT_SPEC.max_depth)
    g.add_argument("--radius", default="auto",
                   help="truncation radius for infinite integrals, or 'auto'")


def _add_params(p: argparse.ArgumentParser, family: bool = True):
    g = p.add_argument_group("transform parameters")
    g.add_argument("--alpha", type=float, default=2.0)
    g.add_argument("--beta", type=float, default=2.0)
    g.add_argument("--c", type=float, default=0.0)
    g.add_argument("--m", type=int, default=0)
    if family:
        g.add_argument("--family", choices=("S", "SP", "SR"),
                       help="phantom family (defaults to the one matching --kind)")
        g.add_argument("--amplitude", type=float, default=1.0)
        g.add_argument("--shift", type=float, default=0.0, help="centre of the y-envelope")
        g.add_argument("--width", type=float, default=1.0)


def _add_io(p: argparse.ArgumentParser):
    p.add_argument("--format", choices=FORMATS, default="f64le")
    p.add_argument("--seed", type=int, default=0)


def _spec(a) -> QuadSpec:
    radius = a.radius if a.radius == "auto" else float(a.radius)
    try:
        return QuadSpec(rel_tol=a.rel_tol, abs_tol=a.abs_tol, max_depth=a.max_depth,
                        truncation_radius=radius)
    except ValueError as exc:
        raise CliError(str(exc)) from None


def _params(a) -> TransformParams:
    return validate_params(TransformParams(a.alpha, a.beta, a.c, a.m))


def _phantom(a, kind: Optional[str] = None):
    p = _params(a)
    family = a.family or FAMILY_FOR.get(kind or "Q", "S")
    return make_phantom(family, p, amplitude=a.amplitude, shift=a.shift, width=a.width)


def _meta(a, **extra):
    meta = {"seed": str(a.seed)}
    meta.update({k: str(v) for k, v in extra.items()})
    return meta


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_phantom(a) -> int:
    f = _phantom(a)
    nx, ny, x0, y0, dx, dy = a.grid
    g = Grid2.from_function(f, nx, ny, x0, y0, dx, dy)
    meta = _meta(a, family=f.name, alpha=a.alpha, beta=a.beta, c=a.c, m=a.m)
    write_grid(a.out, g, a.format, meta)
    rep = check_membership(f, seed=a.seed)
    side = Path(str(a.out) + ".membership.txt")
    side.write_text(f"# membership checks for {f.name} (seed {a.seed})\n" + rep.as_text() + "\n")
    print(f"wrote {a.out} ({nx}x{ny}), max|f| = {np.abs(g.values).max():.6g}")
    print(f"membership: {'PASS' if rep.passed else 'FAIL'} ({side})")
    return 0


def cmd_forward(a) -> int:
    f = _phantom(a, a.kind)
    p = _params(a)
    s = a.s_grid if a.s_grid is not None else default_s_axis()
    u = a.u_grid if a.u_grid is not None else default_u_axis(f, a.kind, p)
    sino = forward_grid(a.kind, f, p, s, u, _spec(a), derivative=a.derivative)
    write_sinogram(a.out, sino, a.format, _meta(a, family=f.name))
    print(f"wrote {a.out}: {a.kind} transform, {s.size} s x {u.size} u samples, "
          f"converged {sino.meta['converged']}")
    return 0


def _write_with_mask(a, g: Grid2, meta):
    write_grid(a.out, g, a.format, meta)
    mask = g.valid if g.valid is not None else np.ones(g.values.shape, dtype=bool)
    mask_path = Path(str(a.out) + ".mask")
    write_grid(mask_path, g.with_values(mask.astype(float)), a.format, {"content": "valid"})
    bad = int(np.count_nonzero(~mask))
    print(f"wrote {a.out} and {mask_path}; {bad} of {mask.size} samples flagged invalid")


def cmd_invert(a) -> int:
    p = _params(a)
    spec = _spec(a)
    if a.sinogram:
        sino = read_sinogram(a.sinogram)
        if sino.kind != a.kind:
            raise CliError(f"{a.sinogram} holds a {sino.kind} transform, not {a.kind}")
        du_mode = a.du_mode or "fd"
        job = InversionJob(a.kind, sino.params, a.grid, sinogram=sino, spec=spec,
                           du_mode=du_mode, s_mode=a.s_mode, s_max=a.s_max)
    else:
        job = InversionJob(a.kind, p, a.grid, field=_phantom(a, a.kind), spec=spec,
                           du_mode=a.du_mode or "exact", s_mode=a.s_mode, s_max=a.s_max)
    g = invert(job)
    _write_with_mask(a, g, _meta(a))
    return 0


def cmd_xray_forward(a) -> int:
    f = gaussian(a.amplitude, (0.0, 0.0), a.width) if a.field == "gaussian" else _phantom(a)
    th, t = default_xray_axes(f, a.n_theta, a.n_t)
    sino = xray_forward_grid(f, th, t, _spec(a))
    write_xray(a.out, sino, a.format, _meta(a, field=f.name))
    print(f"wrote {a.out}: {th.size} angles x {t.size} offsets")
    return 0


def cmd_xray_invert(a) -> int:
    spec = _spec(a)
    if a.sinogram:
        Xf = XrayData(read_xray(a.sinogram), mode=a.dt_mode)
    else:
        f = gaussian(a.amplitude, (0.0, 0.0), a.width) if a.field == "gaussian" else _phantom(a)
        Xf = XrayOracle(f, spec)
    g = xray_invert_grid(Xf, a.grid, spec)
    _write_with_mask(a, g, _meta(a))
    return 0


def _verify_rows(a):
    """Yield ``(check, kind, residual, threshold)`` rows."""
    p = _params(a)
    spec = _spec(a)
    rng = np.random.default_rng(a.seed)
    ident = a.identity
    if ident.startswith(("radon", "derivative")):
        deriv = ident.startswith("derivative")
        kind = IDENTITY_KIND[ident[-1]]
        f = _phantom(a, kind)
        s = rng.uniform(-2.0, 2.0, a.samples)
        u = rng.uniform(-2.0, 2.0, a.samples)
        chk = reduction_sides(f, kind, s, u, spec, derivative=deriv)
        yield ident, kind, chk.max_residual, THRESHOLDS["derivative" if deriv else "radon"]
        return
    for kind in ("Q", "P", "R"):
        fam = a.family or FAMILY_FOR[kind]
        f = make_phantom(fam, p, amplitude=a.amplitude, width=a.width,
                         shift=a.shift if fam != "SR" else 0.0)
        F = reduce(f, KIND_FOR[kind])
        if ident == "limits":
            worst = 0.0
            for _ in range(a.samples):
                s = float(rng.uniform(-2.0, 2.0))
                u = float(rng.uniform(-2.0, 2.0))
                for side, xi in (("+", LIMIT_XI), ("-", -LIMIT_XI)):
                    lim = boundary_limit(F, side, s, u, spec)
                    worst = max(worst, abs(float(F(xi, s * xi + u)) - lim))
            yield f"limits[{KIND_FOR[kind]}]", kind, worst, THRESHOLDS["limits"]
        else:
            w = decay_witness(F)
            # growth-free witness reported as residual 0, a growing tail as its excess
            excess = max(0.0, w.tail - w.bound)
            ok = w.growth_free and math.isfinite(w.bound)
            yield f"decay[{KIND_FOR[kind]}]", kind, (excess if ok else math.inf), 0.0


def cmd_verify(a) -> int:
    rows = list(_verify_rows(a))
    print(f"# verify {a.identity}  seed={a.seed}  samples={a.samples}")
    print(f"{'check':<16} {'kind':<4} {'max residual':>14} {'threshold':>10}  status")
    failed = False
    for name, kind, res, thr in rows:
        ok = res <= thr if thr > 0 else res == 0.0
        failed |= not ok
        print(f"{name:<16} {kind:<4} {res:14.3e} {thr:10.1e}  {'PASS' if ok else 'FAIL'}")
    return 1 if failed else 0


def compare_metrics(a: Grid2, b: Grid2):
    """``(relative L2, max-abs, per-row table)`` of ``a`` against reference ``b``."""
    if not a.same_geometry(b):
        raise GridFormatError(f"grid geometries differ: {a.geometry} vs {b.geometry}")
    d = a.values - b.values
    nb = float(np.linalg.norm(b.values))
    nd = float(np.linalg.norm(d))
    rel = nd / nb if nb > 0 else (0.0 if nd == 0 else math.inf)
    rows = []
    for j, y in enumerate(b.y):
        rb = float(np.linalg.norm(b.values[j]))
        rd = float(np.linalg.norm(d[j]))
        rows.append((j, float(y), rd / rb if rb > 0 else (0.0 if rd == 0 else math.inf),
                     float(np.abs(d[j]).max())))
    return rel, float(np.abs(d).max()), rows


def cmd_compare(a) -> int:
    A, B = read_grid(a.a), read_grid(a.b)
    rel, mx, rows = compare_metrics(A, B)
    print(f"relative_l2 {rel:.6e}")
    print(f"max_abs {mx:.6e}")
    if a.csv:
        lines = ["row,y,relative_l2,max_abs"] + [f"{j},{y!r},{r:.6e},{m:.6e}" for j, y, r, m in rows]
        Path(a.csv).write_text("\n".join(lines) + "\n")
        print(f"per-row profile written to {a.csv}")
    if a.gnuplot:
        src = a.csv or "-"
        print("set datafile separator ','\nset logscale y\nset xlabel 'y'\n"
              f"plot '{src}' using 2:3 with linespoints title 'row relative L2', \\\n"
              f"     '{src}' using 2:4 with linespoints title 'row max abs'")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="seisradon", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom", help="rasterize a built-in phantom")
    _add_params(p)
    p.add_argument("--grid", type=grid_arg, default=(64, 64, -3.0, -3.0, 6 / 63, 6 / 63),
                   help="nx,ny,x0,y0,dx,dy")
    p.add_argument("--out", required=True)
    _add_io(p)
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("forward", help="sample a P, Q or R transform")
    p.add_argument("--kind", choices=("P", "Q", "R"), required=True)
    _add_params(p)
    p.add_argument("--s-grid", type=axis_arg, help="lo,hi,n (default -4,4,33; write --s-grid=-4,4,33 when lo is negative)")
    p.add_argument("--u-grid", type=axis_arg, help="lo,hi,n (default: phantom y-window plus margin)")
    p.add_argument("--derivative", action="store_true", help="sample the u-derivative instead")
    p.add_argument("--out", required=True)
    _add_spec(p)
    _add_io(p)
    p.set_defaults(func=cmd_forward)

    p = sub.add_parser("invert", help="reconstruct from a P, Q or R transform")
    p.add_argument("--kind", choices=("P", "Q", "R"), required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--oracle", action="store_true", help="compute the transform from the phantom")
    src.add_argument("--sinogram", help="sinogram file written by 'forward'")
    _add_params(p)
    p.add_argument("--grid", type=grid_arg, required=True, help="nx,ny,x0,y0,dx,dy")
    p.add_argument("--du-mode", choices=("exact", "fd"))
    p.add_argument("--s-mode", choices=("theta", "direct"), default="theta")
    p.add_argument("--s-max", type=float, default=50.0)
    p.add_argument("--out", required=True)
    _add_spec(p)
    _add_io(p)
    p.set_defaults(func=cmd_invert)

    xp = sub.add_parser("xray", help="classical X-ray transform")
    xsub = xp.add_subparsers(dest="xray_command", required=True)
    for name, func in (("forward", cmd_xray_forward), ("invert", cmd_xray_invert)):
        p = xsub.add_parser(name)
        p.add_argument("--field", choices=("gaussian", "S", "SP", "SR"), default="gaussian")
        _add_params(p)
        if name == "forward":
            p.add_argument("--n-theta", type=int, default=64)
            p.add_argument("--n-t", type=int, default=129)
        else:
            p.add_argument("--sinogram", help="X-ray sinogram file; omit for the oracle field")
            p.add_argument("--dt-mode", choices=("spline", "fd"), default="spline")
            p.add_argument("--grid", type=grid_arg, required=True, help="nx,ny,x0,y0,dx,dy")
        p.add_argument("--out", required=True)
        _add_spec(p)
        _add_io(p)
        p.set_defaults(func=func)

    p = sub.add_parser("verify", help="residual report for an identity")
    p.add_argument("--identity", choices=IDENTITIES, required=True)
    _add_params(p)
    p.add_argument("--samples", type=int, default=25, help="number of random (s, u) samples")
    _add_spec(p)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("compare", help="error metrics of grid A against reference grid B")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--csv", help="write per-row metrics here")
    p.add_argument("--gnuplot", action="store_true", help="print a gnuplot script for the CSV")
    p.set_defaults(func=cmd_compare)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "family", None) == "SR" and getattr(args, "shift", 0.0):
        print("error: the SR family needs --shift 0", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"error: invalid parameters ({exc.violation}): {exc}", file=sys.stderr)
        return 2
    except (CliError, GridFormatError, HullError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
