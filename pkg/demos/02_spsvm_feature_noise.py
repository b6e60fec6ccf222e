"""
Guarding one noisy feature with SP-SVM
======================================

SP-SVM asks every training point to stay on the right side of the margin
after its noisy feature is shifted by a quantile-sized amount in either
direction. The shift grows with the required confidence level.
"""

import numpy as np

from robsvm import (Dataset, KernelSpec, NoiseSpec, PerturbationVector, compute_perturbation, predict,
                    select_noisy_feature, train_csvm, train_spsvm)
from robsvm.bench import SyntheticSpec, extract_linear_boundary, gen_synthetic

# The two-point line again, now with each point allowed to move by 0.5.
# The worst-case copies sit at -0.5 and +0.5, so the margin has to double.
line = Dataset(np.array([[-1.0], [1.0]]), np.array([-1.0, 1.0]))
shift = PerturbationVector(feature_index=0, magnitudes=np.array([0.5, 0.5]))
sp = train_spsvm(line, C=10.0, kernel=KernelSpec.linear(), perturbation=shift)
cs = train_csvm(line, C=10.0, kernel=KernelSpec.linear())
print("w for C-SVM:", cs.weights(), " w for SP-SVM:", sp.weights())

# On the synthetic two-Gaussian data the second feature has the larger
# spread, so it is the one picked as noisy by default.
data = gen_synthetic(SyntheticSpec(n=200, seed=1))
k = select_noisy_feature(data)
print("noisy feature index:", k)

for level in (0.5, 0.55, 0.6, 0.75):
    spec = NoiseSpec("gaussian", alpha_level=level)
    a = compute_perturbation(data, k, spec).magnitudes[0]
    if level == 0.5:
        # zero shift: the model coincides with C-SVM and a warning says so
        import warnings
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            model = train_spsvm(data, 100.0, KernelSpec.linear(), spec)
    else:
        model = train_spsvm(data, 100.0, KernelSpec.linear(), spec)
    b = extract_linear_boundary(model)
    acc = np.mean(predict(model, data.features)[0] == data.labels)
    print(f"level {level:.2f}: shift {a:.3f}, boundary x2 = {b.m:.3f} x1 + {b.q:.3f}, accuracy {acc:.3f}")

# Heavy-tailed noise assumptions give larger shifts at the same level.
for dof in (1.0, 5.0, 30.0):
    a = compute_perturbation(data, k, NoiseSpec("t", dof, 0.6)).magnitudes[0]
    print(f"Student-t with {dof:g} dof at level 0.6: shift {a:.3f}")
