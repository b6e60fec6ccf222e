"""
Training a soft-margin SVM through its dual
===========================================

Two points on a line, solved by hand and by the library, then a small
2-D problem with a saved and reloaded model.
"""

import tempfile
from pathlib import Path

import numpy as np

from robsvm import Dataset, KernelSpec, TrainedModel, predict, train_csvm

# x = -1 has label -1, x = +1 has label +1. The dual optimum puts 1/2 on
# each point, so w = 1, b = 0 and the decision function is f(x) = x.
ds = Dataset(np.array([[-1.0], [1.0]]), np.array([-1.0, 1.0]))
model = train_csvm(ds, C=10.0, kernel=KernelSpec.linear())
print("dual coefficients:", model.alpha)
print("bias:", round(model.bias, 12))

labels, values = predict(model, np.array([[0.3], [-2.0], [0.0]]))
print("f(0.3), f(-2), f(0):", values)
print("labels (a zero decision value maps to +1):", labels)

# A slightly larger problem with an RBF kernel.
rng = np.random.default_rng(7)
y = np.where(rng.random(80) < 0.5, 1.0, -1.0)
radius = np.where(y > 0, 1.0, 2.5) + 0.3 * rng.standard_normal(80)
angle = rng.uniform(0, 2 * np.pi, 80)
X = np.column_stack([radius * np.cos(angle), radius * np.sin(angle)])
rings = Dataset(X, y)

rbf = train_csvm(rings, C=5.0, kernel=KernelSpec.rbf(0.5))
train_acc = np.mean(predict(rbf, X)[0] == y)
print(f"RBF model: {np.sum(rbf.alpha > 0)} support vectors, training accuracy {train_acc:.3f}")

# Models are plain JSON documents and reload bit for bit.
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "rings.json"
    rbf.save(path)
    again = TrainedModel.load(path)
    same = np.array_equal(predict(again, X)[1], predict(rbf, X)[1])
    print("reloaded model gives identical decision values:", same)
