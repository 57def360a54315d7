"""The bulk cell problem collapses onto a trace formula.

For a purely interfacial initial energy (zero bulk density, normal-jump
kernel), the relaxed bulk density at a gradient pair (A, B) is |tr(A-B)|:
whatever disarrangement tensor M = A - B the staircases must realize,
only its trace resists cancellation between oppositely oriented jump
planes. Three independent routes are compared on random pairs:

  closed form   |tr(A - B)|
  frame grid    cheapest rank-one frame on a dense grid of rotations
  estimate      simplex search over frames, reported with its frame

The grid and the estimate are upper bounds by construction, so the gap
columns must be nonnegative (up to solver tolerance) and tiny.
"""

import numpy as np

from sdrelax import (
    DensitySet,
    bulk_density,
    estimate_relaxed_bulk,
    frame_grid_minimum,
    relaxed_bulk_abs,
    surface_density,
)

psi = surface_density("abs_normal_jump")
ds = DensitySet.simple(bulk_density("zero"), psi)

print("bulk cell problem, ten random 2x2 pairs")
print(f"{'pair':>4} {'closed form':>12} {'frame grid':>12} {'estimate':>12} "
      f"{'grid gap':>10} {'route gap':>10}")
children = np.random.SeedSequence(0).spawn(10)
for i, child in enumerate(children):
    rng = np.random.default_rng(child)
    A = rng.normal(size=(2, 2))
    B = rng.normal(size=(2, 2))
    lower = relaxed_bulk_abs(A, B)
    grid, _ = frame_grid_minimum(A - B, psi)
    sol = estimate_relaxed_bulk(A, B, ds)
    print(f"{i:>4} {lower:>12.8f} {grid:>12.8f} {sol.value:>12.8f} "
          f"{grid - lower:>10.1e} {abs(sol.value - grid):>10.1e}")

print()
print("a traceless pair is free: equal and opposite normal jumps cancel")
A = np.diag([1.0, -1.0])
sol = estimate_relaxed_bulk(A, np.zeros((2, 2)), ds)
print(f"  A = diag(1, -1), B = 0: estimate {sol.value:.2e} at frame angle "
      f"{sol.frame.angles[0]:.6f} (pi/4 = {np.pi/4:.6f})")
