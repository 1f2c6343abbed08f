"""
A backward-corrected loss that runs off to minus infinity
==========================================================

Three classes, partial labels with spurious-label rate 0.1, and a
hand-built left inverse of the transition matrix. The backward-corrected
cross entropy is unbiased, yet along the logit ray t * (1, 1, -2) the loss
of the weak label {1, 2} decreases linearly forever. Adding a squared
logit penalty turns the ray back up.
"""

import numpy as np

from weakproper import GLS, LogSumExp, WeakLoss, certify_boundedness
from weakproper.oracle import ray_divergence
from weakproper.weaklabels import partial_label_3class, partial_label_R_example

T = partial_label_3class(0.1)
R = partial_label_R_example(0.1)
print("R T = I up to", R.identity_error(T))

lse = LogSumExp(3)
verdict = certify_boundedness(lse, R)
print("plain loss:", verdict.status, "weak label", T.weak_labels[verdict.weak_label])

###############################################################################
# Walk the ray with and without the penalty.

d = np.array([1.0, 1.0, -2.0])
ts = np.array([0.5, 1, 2, 5, 10, 20, 50])
plain = ray_divergence(WeakLoss(lse, R, "bc"), d, ts)
squeezed = ray_divergence(WeakLoss(GLS(lse, 1.0, 2.0), R, "bc"), d, ts)

print(f"{'t':>6} {'plain':>10} {'k=1, alpha=2':>14}")
for t, a, b in zip(ts, plain, squeezed):
    print(f"{t:6g} {a:10.3f} {b:14.3f}")

slope = np.polyfit(ts[-3:], plain[-3:], 1)[0]
print("asymptotic slope of the plain loss:", round(slope, 4), "(-29/9 =", round(-29 / 9, 4), ")")

###############################################################################
# The penalty keeps the loss bounded below for any alpha > 1, but not below 1.

for alpha in (0.5, 1.0, 1.5, 2.0):
    v = certify_boundedness(GLS(lse, 1.0, alpha), R)
    print(f"alpha={alpha}: {v.status}")
