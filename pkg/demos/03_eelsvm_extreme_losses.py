"""
Penalising the worst violations with EEL-SVM
============================================

The extreme empirical loss at level alpha is the mean of the worst
(1 - alpha) share of the losses. EEL-SVM puts this quantity in place of
the usual average hinge loss.
"""

import numpy as np

from robsvm import KernelSpec, eel, predict, train_csvm, train_eelsvm
from robsvm.bench import ContaminationSpec, SyntheticSpec, contaminate_synthetic, gen_synthetic

losses = np.array([3.0, 1.0, 2.0, 10.0])
for alpha in (0.0, 0.25, 0.5, 0.75):
    print(f"eel at alpha={alpha}: {eel(losses, alpha):.4f}")
# between the grid points the estimator interpolates
print("eel at alpha=0.6:", eel(losses, 0.6))

# With alpha = 0 and D = C * N the EEL problem is C-SVM in disguise.
data = gen_synthetic(SyntheticSpec(n=120, seed=3))
data = contaminate_synthetic(data, ContaminationSpec(0.05, "t1", seed=3))
C = 100.0
ref = predict(train_csvm(data, C, KernelSpec.linear()), data.features)[1]
same = predict(train_eelsvm(data, C * data.n, KernelSpec.linear(), 0.0), data.features)[1]
print("max decision gap, EEL(alpha=0) vs C-SVM:", np.max(np.abs(ref - same)))

# Raising alpha concentrates the penalty on fewer points.
for alpha in (0.0, 0.02, 0.05, 0.2, 0.5):
    m = train_eelsvm(data, C * data.n, KernelSpec.linear(), alpha)
    acc = np.mean(predict(m, data.features)[0] == data.labels)
    busy = np.sum(m.alpha > 1e-8 * m.hyperparams["D1"])
    print(f"alpha {alpha:.2f}: box D1 = {m.hyperparams['D1']:.1f}, {busy} active points, accuracy {acc:.3f}")
