"""Two-phase design on a fractured medium.

A phase indicator chi marks each mesh cell as material 0 or 1. The design
energy selects bulk and surface densities by phase, adds the perimeter of
the phase interface, and charges a pair kernel where the deformation
jumps across that interface. The relaxed interface cell problem reduces
to clean numbers in the limiting cases printed below: no jump at all is
free, a pure phase flip costs exactly the perimeter of one plane, and a
deformation jump rides along for its usual normal-jump price.
"""

import numpy as np

from sdrelax.energy import (
    DensitySet,
    bulk_density,
    energy,
    interface_density,
    surface_density,
)
from sdrelax.fields import random_structured_deformation
from sdrelax.optdesign import (
    DesignBoundaryData,
    PhaseField,
    design_energy,
    estimate_interface_cell,
    perimeter,
)

psi = surface_density("abs_normal_jump")
ds = DensitySet.design(bulk_density("zero"), bulk_density("zero"),
                       psi, psi, interface_density("phase_gap_normal_jump"))

nu = np.array([0.0, 1.0])
c = np.array([0.3, 0.4])
d = np.array([0.3, 1.2])
rows = [
    ("same phase, same value", DesignBoundaryData(1, 1, c, c, nu)),
    ("phase flip only", DesignBoundaryData(1, 0, c, c, nu)),
    ("value jump only", DesignBoundaryData(1, 1, c, d, nu)),
    ("both jump", DesignBoundaryData(1, 0, c, d, nu)),
]
print("interface cell problem across a unit plane")
print(f"{'datum':>24} {'cell value':>12} {'phase planes':>13} "
      f"{'value planes':>13}")
for name, data in rows:
    sol = estimate_interface_cell(data, ds)
    print(f"{name:>24} {sol.value:>12.6f} "
          f"{len(sol.competitor['phase_jump_slots']):>13} "
          f"{len(sol.competitor['deformation_jump_slots']):>13}")

print()
print("sanity on a mesh: constant chi reduces to the plain energy")
sd = random_structured_deformation(0, dim=2, resolution=3, continuous=False)
chi = PhaseField.constant(sd.g.mesh, 1)
plain = energy(sd.g, DensitySet.simple(bulk_density("zero"), psi))
print(f"  design energy {design_energy(chi, sd.g, ds):.10f} vs plain "
      f"{plain:.10f}, perimeter {perimeter(chi):.1f}")
stripes = PhaseField.from_indicator(sd.g.mesh,
                                    lambda x: int(3 * x[0]) % 2 == 0)
print(f"  striped chi adds its interface: perimeter {perimeter(stripes):.1f}, "
      f"design energy {design_energy(stripes, sd.g, ds):.10f}")
