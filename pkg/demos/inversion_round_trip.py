"""Reconstruct phantoms from their P, Q and R transforms.

Oracle mode computes u-derivatives of the transform on demand; data mode
differentiates a sampled sinogram.  The grids are kept small so the demo
runs in about a minute.
"""
import time

import numpy as np

from seisradon.core import TransformParams
from seisradon.forward import forward_grid
from seisradon.inversion import InversionJob, invert
from seisradon.phantoms import make_phantom
from seisradon.quadrature import QuadSpec

p = TransformParams(alpha=2, m=1)
geo = (16, 16, -3.0, -3.0, 0.4, 0.4)
spec = QuadSpec(rel_tol=1e-6)


def report(label, grid, f):
    X, Y = grid.mesh()
    ex = f(X, Y)
    err = np.linalg.norm(grid.values - ex) / np.linalg.norm(ex)
    print(f"{label:<28} relative L2 {err:.2e}")


for kind, family in (("Q", "S"), ("P", "SP"), ("R", "SR")):
    f = make_phantom(family, p)
    t0 = time.perf_counter()
    g = invert(InversionJob(kind, p, geo, field=f, spec=spec))
    report(f"{kind} oracle ({time.perf_counter() - t0:.0f} s)", g, f)

# P only sees the even part of a field about x = c
mix = make_phantom("S", TransformParams(alpha=2, m=0)) + make_phantom(
    "SP", TransformParams(alpha=2, m=0), amplitude=0.5, shift=0.3)
g = invert(InversionJob("P", mix.params, geo, field=mix, spec=spec))
report("P of a mixture vs even part", g, mix.even_part())

# data mode: a sampled sinogram covers |s| <= 4 only, so the angular
# integral is truncated and the error is visibly larger
f = make_phantom("S", p)
sino = forward_grid("Q", f, p, np.linspace(-4, 4, 33), np.linspace(-14, 14, 561))
g = invert(InversionJob("Q", p, (9, 9, -1.6, -1.6, 0.4, 0.4), sinogram=sino, du_mode="fd",
                        spec=spec))
report("Q from sampled data", g, f)
