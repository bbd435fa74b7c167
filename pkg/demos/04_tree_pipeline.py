"""
Ball trees, localization and the leaves-to-curve pipeline
=========================================================

Every family ball owns a connected core built from its c-dilate; core
intersection one family step down induces the ball tree.  The localization
pass marks balls good while they hold enough of the level set of the
normalized payoff sum, keeping the good payoff total under N D_T / eps.
Centers of mass of the surviving balls then feed the curve construction.
"""

import numpy as np

from rectify import beta, measures, nets, trees

mu = measures.generate("segment", {"dim": 2}, n=400, seed=5)
# k0 = -3 makes the root's c-dilate swallow the whole segment, so the tree
# covers every atom one family step (J = 10 net levels) down
fam = nets.build_family(mu, k0=-3, k_max=7, lambda2=1.1, J=10)
family = trees.build_cores(fam)[0]
print("core properties:", trees.verify_cores(fam, family) or "(ii)-(iv) hold")

tree = trees.build_tree(fam, family, top=(-3, 0))
print("tree nodes:", len(tree.nodes), " depth:", tree.max_depth(),
      " checks:", trees.verify_tree(tree) or "clean")

payoff = {n: beta.beta2(mu, tree.ball(n), dilation=2.0).value ** 2
          * tree.ball(n).diam for n in tree.nodes}
for N, eps in [(1.0, 0.01), (10.0, 0.1)]:
    part = trees.good_bad(tree, mu, payoff, N=N, eps=eps)
    print(f"N={N} eps={eps}: good={len(part.good)} bad={len(part.bad)} "
          f"sum_b={part.good_sum:.3g} <= {part.bound:.3g}  "
          f"mu(E')={part.mu_E_prime:.3f} >= "
          f"{(1 - eps * mu.total_mass) * part.mu_E:.3f}")

res = trees.leaves_curve(tree, mu)
print(f"leaves curve: H1 = {res.h1_gamma:.4f} <= bound {res.bound:.1f}  "
      f"d_T = {res.d_T:.1f}  leaf distance = {res.leaf_distance:.2e}")
