"""Screening candidate densities against the structural hypotheses.

The relaxation machinery needs its surface kernel to be one-homogeneous
and subadditive in the jump (otherwise staircase refinement changes the
price of a jump), bounded above linearly, and ideally coercive from
below. Bulk densities must keep the declared polynomial growth; pair
kernels for two-phase design must be nonnegative, symmetric under swaps,
Lipschitz in the traces, and vanish on the diagonal. The checkers sample
these properties and report pass, warn, or fail with the worst violation.
"""

import numpy as np

from sdrelax.energy import (
    BulkDensity,
    bulk_density,
    check_bulk_growth,
    check_interface_axioms,
    check_surface_axioms,
    interface_density,
    surface_density,
)


def show(title, report):
    print(title)
    for check in report.checks:
        print(f"  {check.name:<18} {check.status:<5} worst {check.worst:.3e}")
    print()


show("normal-jump kernel |lam . nu| (the relaxed exact kernel)",
     check_surface_axioms(surface_density("abs_normal_jump"), dim=3))
show("squared magnitude |lam|^2 (rejected: not one-homogeneous)",
     check_surface_axioms(surface_density("squared_jump_magnitude"), dim=3))
show("plain magnitude |lam| (passes with coercivity)",
     check_surface_axioms(surface_density("jump_magnitude"), dim=3))
show("phase-gap pair kernel |a - b| |(c - d) . nu|",
     check_interface_axioms(interface_density("phase_gap_normal_jump"),
                            dim=3))
show("bulk growth of the squared Frobenius norm (declared p = 2)",
     check_bulk_growth(bulk_density("frobenius_power"), dim=2))
exp_density = BulkDensity("exp_frobenius",
                          lambda A: float(np.exp(np.linalg.norm(A))),
                          growth_p=2.0, lipschitz_C=1.0)
show("exponential bulk density declared p = 2 (caught lying)",
     check_bulk_growth(exp_density, dim=2))
