"""
Beta numbers and the multiscale Jones sum
=========================================

The normalized L2 beta number of a window measures how tightly the mass
hugs its best line.  Summing beta2^2 * diam/mass over all multiscale
windows containing a point separates measures carried by curves (bounded
sums) from spread-out ones (linearly growing sums).
"""

import numpy as np

from rectify import beta, jones, measures, nets
from rectify.geometry import Ball

# beta2 of the unit square's corners: best line splits the square
corners = measures.DiscreteMeasure(
    np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]),
    np.full(4, 0.25))
res = beta.beta2(corners, Ball([0.5, 0.5], np.sqrt(2) / 2), dilation=2.0)
print("square beta2:", round(res.value, 5), "= 1/(4 sqrt 2)")

# per-point Jones profiles: flat data stays at zero, dust grows per scale
segment = measures.generate("segment", {"dim": 2}, n=1000, seed=3)
cantor = measures.generate("cantor4", {"depth": 6}, n=1, seed=0)
fam_s = nets.build_family(segment, k0=0, k_max=10)
fam_c = nets.build_family(cantor, k0=0, k_max=10)

prof = jones.jones_profile(segment, fam_s, segment.atoms[500], r=2.0)
print("segment partial sums:", [round(prof.partial_sums[k], 6)
                                for k in sorted(prof.partial_sums)][:6])
prof = jones.jones_profile(cantor, fam_c, cantor.atoms[1000], r=2.0)
print("cantor partial sums: ", [round(prof.partial_sums[k], 3)
                                for k in sorted(prof.partial_sums)][:6])

# growth-slope classification over a sample of atoms
rng = np.random.default_rng(0)
sample = cantor.atoms[rng.choice(len(cantor.atoms), 50, replace=False)]
labels = jones.classify(cantor, fam_c, sample)
frac = np.mean([l.label == "divergent" for l in labels])
print(f"cantor atoms flagged divergent: {frac:.0%}")
labels = jones.classify(segment, fam_s, segment.atoms[::100])
print("segment labels:", {l.label for l in labels})
