"""A deck of cards sliding without paying interfacial energy.

The limit macroscopic deformation is a simple shear g(x) = x + x3 e1
with submacroscopic gradient G = I: all shearing comes from slips between
the cards. Each approximant stacks n horizontal layers and slides each
one sideways by 1/n. The jumps are tangential (jump direction e1, plane
normal e3), so any kernel built from the normal component of the jump
charges nothing, no matter how much total variation the slips carry.
"""

import numpy as np

from sdrelax import DensitySet, bulk_density, energy, surface_density
from sdrelax.fields import (
    deck_of_cards,
    deck_of_cards_deformation,
    singular_total_variation,
)
from sdrelax.relaxed import disarrangement_trace_integral

ds = DensitySet.simple(bulk_density("zero"), surface_density("abs_normal_jump"))

print("deck of cards: shear carried entirely by interlayer slips")
print(f"{'n':>4} {'jump tv':>10} {'energy':>10}")
for n in (1, 2, 4, 8, 16, 32):
    card = deck_of_cards(n)
    print(f"{n:>4} {singular_total_variation(card):>10.6f} "
          f"{energy(card, ds):>10.6f}")

sd = deck_of_cards_deformation()
M = np.asarray(sd.disarrangements()).reshape(3, 3)
print()
print("disarrangement density M = grad g - G:")
for row in M:
    print("   [" + "  ".join(f"{v:5.2f}" for v in row) + "]")
print(f"trace integral over the cube: {disarrangement_trace_integral(sd):.2e}.")
print("M is the rank-one slip e1 (x) e3 and is traceless, so the relaxed")
print("normal-jump energy of the pair vanishes: frictionless sliding.")
