"""The curve transforms are X-ray transforms of a reduced field.

For each transform kind the script evaluates both sides of the reduction
identity on a 7x7 (s, u) sample and prints the largest discrepancy, then
shows how the reduced field behaves next to its kink line xi = 0.
"""
import numpy as np

from seisradon.core import TransformParams
from seisradon.phantoms import make_phantom
from seisradon.reduction import boundary_limit, reduce, reduction_sides

S, U = np.meshgrid(np.linspace(-2, 2, 7), np.linspace(-2, 2, 7))
s, u = S.ravel(), U.ravel()

for kind, family, p in [("Q", "S", TransformParams(alpha=2.5, m=1)),
                        ("P", "SP", TransformParams(alpha=2.5, m=1)),
                        ("R", "SR", TransformParams(alpha=2, beta=2, m=1))]:
    f = make_phantom(family, p)
    val = reduction_sides(f, kind, s, u)
    der = reduction_sides(f, kind, s, u, derivative=True)
    print(f"{kind} (alpha={p.alpha}): value residual {val.max_residual:.1e}, "
          f"u-derivative residual {der.max_residual:.1e}")

# at m = alpha - 2 the reduced field jumps across xi = 0
p = TransformParams(alpha=3, m=1)
F = reduce(make_phantom("S", p), "F")
print("\nF near xi = 0 for alpha=3, m=1 along eta = 0.5 xi + 0.2:")
for side in "+-":
    lim = boundary_limit(F, side, 0.5, 0.2)
    for k in (2, 4, 6):
        xi = (1 if side == "+" else -1) * 10.0 ** -k
        print(f"  xi={xi:+.0e}  F={float(F(xi, 0.5 * xi + 0.2)):+.8f}  limit={lim:+.8f}")
