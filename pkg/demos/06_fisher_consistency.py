"""
Which losses recover the Bayes sign?
====================================

For a point with P(Y=+1) = p the conditional risk of a margin loss is
p L(1 - z) + q L(1 + z). A loss is Fisher consistent when this risk is
minimised by z = sign(p - q).
"""

import numpy as np

from robsvm import LossSpec, fisher_argmin

candidates = {
    "hinge": LossSpec.hinge(),
    "pinball a=-0.5": LossSpec.pinball(-0.5),
    "truncated hinge a=2": LossSpec.truncated_hinge(2.0),
    "least squares": LossSpec.least_square(),
}
for name, spec in candidates.items():
    zs = [fisher_argmin(spec, p, 1 - p) for p in (0.55, 0.7, 0.9)]
    print(f"{name:22s} argmin at p = 0.55, 0.7, 0.9: {np.round(zs, 3)}")

# Least squares lands on p - q rather than on the sign itself.
print("p - q at p = 0.7:", 0.7 - 0.3)
