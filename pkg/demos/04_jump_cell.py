"""The surface cell problem and why splitting a jump never pays.

Fixing a boundary datum that jumps by lam across a plane with normal nu,
competitors may spread the jump over several parallel planes or bend the
interface. For the normal-jump kernel the answer is the single flat
interface: the kernel is one-homogeneous and subadditive in the jump, so
splitting lam into fractions costs at least as much, and tilting a plane
enlarges its area faster than it shrinks the normal component.
"""

import numpy as np

from sdrelax import estimate_relaxed_surface, surface_density
from sdrelax.cell import realize_surface_competitor

psi = surface_density("abs_normal_jump")

print("surface cell problem, eight random data in three dimensions")
print(f"{'case':>4} {'|lam . nu|':>12} {'estimate':>12} {'two planes':>12} "
      f"{'three planes':>13}")
children = np.random.SeedSequence(0).spawn(8)
for i, child in enumerate(children):
    rng = np.random.default_rng(child)
    lam = rng.normal(size=3)
    nu = rng.normal(size=3)
    nu /= np.linalg.norm(nu)
    direct = abs(float(lam @ nu))
    sol = estimate_relaxed_surface(lam, nu, psi)
    _, two = realize_surface_competitor(lam, nu,
                                        splits=((0.5, -0.2), (0.5, 0.2)),
                                        psi=psi)
    _, three = realize_surface_competitor(
        lam, nu, splits=((0.25, -0.3), (0.5, 0.0), (0.25, 0.3)), psi=psi)
    print(f"{i:>4} {direct:>12.8f} {sol.value:>12.8f} {two:>12.8f} "
          f"{three:>13.8f}")

print()
print("tangential datum: a jump orthogonal to the plane normal is free")
lam = np.array([1.0, 0.0, 0.0])
nu = np.array([0.0, 0.0, 1.0])
sol = estimate_relaxed_surface(lam, nu, psi)
print(f"  lam = e1, nu = e3: estimate {sol.value:.2e}")
