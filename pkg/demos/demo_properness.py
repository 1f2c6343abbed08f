"""
Recovering the class posterior from weak labels
================================================

A weak-label loss is proper for a corruption model T when the expected loss
under the weak-label distribution T p is minimized at q = p. We check this by
brute force: minimize the expected loss from random starts in logit space and
decode the minimizer.
"""

import numpy as np

from weakproper import oracle
from weakproper.errors import Inconclusive
from weakproper.losses import make_loss
from weakproper.weaklabels import complementary, partial_label_3class, symmetric_noise

p = np.array([0.2, 0.3, 0.5])
families = {"complementary": complementary(3),
            "symmetric 0.2": symmetric_noise(3, 0.2),
            "partial 0.1": partial_label_3class(0.1)}
losses = {"backward CE": {"variant": "bc"},
          "forward CE": {"variant": "fc"},
          "backward CE + gLS(0.1, 2)": {"variant": "bc", "k": 0.1, "alpha": 2.0},
          "backward CE + gLS(1, 0.5)": {"variant": "bc", "k": 1.0, "alpha": 0.5}}

for fname, T in families.items():
    print(fname)
    for lname, spec in losses.items():
        loss = make_loss(spec, T)
        try:
            rep = oracle.verify_t_proper(loss, T, p)
            note = "diverged" if rep.diverged else f"deviation {rep.deviation:.1e}"
        except Inconclusive:
            note = "no restart converged"
        print(f"  {lname:28s} {note}")

###############################################################################
# A direct sampling check of the properness inequality: no q beats p.

rng = np.random.default_rng(0)
ps = rng.dirichlet(np.ones(3), size=50)
qs = rng.dirichlet(np.ones(3), size=500)
T = complementary(3)
gap = oracle.properness_gap(make_loss({"variant": "bc"}, T), T, ps, qs)
print("smallest excess risk over 25000 (p, q) pairs:", gap)
