"""
Discrete measures and multiscale nets
=====================================

Generate fixture measures, query ball masses and doubling behaviour, then
build the nested net hierarchy with its dilated balls and check the finite
overlap bound against the measured doubling constant.
"""

import numpy as np

from rectify import measures, nets

# a segment, a circle and the four-corner Cantor dust
segment = measures.generate("segment", {"dim": 2}, n=1000, seed=7)
circle = measures.generate("circle", {"dim": 2}, n=1000, seed=7)
cantor = measures.generate("cantor4", {"depth": 6}, n=1, seed=0)

print("segment mass:", segment.total_mass)
print("ball mass around the midpoint, r=0.25:",
      measures.ball_mass(segment, [0.5, 0.0], 0.25))

# doubling ratios hover near 2 on the segment and stay bounded on the dust
rep = measures.doubling_profile(segment, segment.atoms[500], 0.02, 0.4)
print("segment doubling ratios:", np.round(rep.ratios[:6], 3))
rep = measures.doubling_profile(cantor, cantor.atoms[2000],
                                2 * cantor.min_atom_gap(), 1.0)
print("cantor sup doubling ratio:", round(rep.sup_ratio, 2))

# nested maximal nets at scales 2^-k, then the family of dilated balls
fam = nets.build_family(segment, k0=0, k_max=8)
print("net sizes per level:", [(lv.k, len(lv.indices)) for lv in fam.levels])
print("family verification:", nets.verify_family(fam, segment) or "clean")

# finite overlap: counts stay below D^(j-k+3+log2 lambda2)
D = measures.doubling_constant(segment)
for k, j in [(0, 4), (2, 6), (4, 8)]:
    count = nets.overlap_counts(fam, segment, k, j)
    bound = D ** (j - k + 3 + np.log2(fam.lambda2))
    print(f"overlap k={k} j={j}: {count} <= {bound:.1f}")
