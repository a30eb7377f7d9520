"""Classical X-ray transform: sample a sinogram, then invert it with the vp formula.

Run with ``python3 demos/xray_round_trip.py``; takes about half a minute.
"""
import time

import numpy as np

from seisradon.phantoms import gaussian
from seisradon.quadrature import QuadSpec
from seisradon.xray import XrayData, default_xray_axes, xray_forward_grid, xray_invert_grid

f = gaussian()
spec = QuadSpec(rel_tol=1e-8)

# 64 angles at cell midpoints of (0, pi), 129 offsets covering the support
theta, t = default_xray_axes(f, 64, 129)
sino = xray_forward_grid(f, theta, t, spec)
print(f"sinogram {sino.values.shape}, peak {sino.values.max():.6f} (sqrt(pi) = {np.sqrt(np.pi):.6f})")

# the inversion only sees the samples: spline derivative in t, then the
# Hilbert transform and backprojection
t0 = time.perf_counter()
grid = xray_invert_grid(XrayData(sino), (64, 64, -3.0, -3.0, 6 / 63, 6 / 63), spec)
X, Y = grid.mesh()
err = np.linalg.norm(grid.values - f(X, Y)) / np.linalg.norm(f(X, Y))
print(f"reconstruction relative L2 error {err:.2e} in {time.perf_counter() - t0:.1f} s")

# a central row of the reconstruction next to the truth
j = 32
for i in range(0, 64, 8):
    print(f"  x={grid.x[i]:+.3f}  f={f(grid.x[i], grid.y[j]):.6f}  rec={grid.values[j, i]:.6f}")
