"""Kernel functions, Gram matrices and the shifted copies used by SP-SVM."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DataError


class KernelKind(str, enum.Enum):
    LINEAR = "linear"
    RBF = "rbf"


@dataclass(frozen=True)
class KernelSpec:
    kind: KernelKind = KernelKind.LINEAR
    gamma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", KernelKind(self.kind))
        if self.kind is KernelKind.RBF and not self.gamma > 0:
            raise ValueError(f"RBF kernel needs gamma > 0, got {self.gamma}")

    @classmethod
    def linear(cls) -> "KernelSpec":
        return cls(KernelKind.LINEAR)

    @classmethod
    def rbf(cls, gamma: float) -> "KernelSpec":
        return cls(KernelKind.RBF, float(gamma))

    def to_dict(self) -> dict:
        if self.kind is KernelKind.LINEAR:
            return {"kind": "linear"}
        return {"kind": "rbf", "gamma": self.gamma}

    @classmethod
    def from_dict(cls, d) -> "KernelSpec":
        return cls(KernelKind(d["kind"]), float(d.get("gamma", 1.0)))


def kernel_eval(spec: KernelSpec, x, x2) -> float:
    x = np.asarray(x, dtype=float).ravel()
    x2 = np.asarray(x2, dtype=float).ravel()
    if x.shape != x2.shape:
        raise DataError(f"dimension mismatch: {x.shape[0]} vs {x2.shape[0]}")
    if spec.kind is KernelKind.LINEAR:
        return float(x @ x2)
    diff = x - x2
    return float(np.exp(-spec.gamma * (diff @ diff)))


def gram(spec: KernelSpec, A, B=None) -> np.ndarray:
    """Matrix of kernel values between the rows of ``A`` and ``B``.

    ``B=None`` means ``B is A``; the result is then symmetrised exactly.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    same = B is None
    B = A if same else np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != B.shape[1]:
        raise DataError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    if spec.kind is KernelKind.LINEAR:
        K = A @ B.T
    else:
        # cdist evaluates each squared distance directly, so the diagonal is exactly 0
        K = np.exp(-spec.gamma * cdist(A, B, "sqeuclidean"))
    if same:
        K = 0.5 * (K + K.T)
    return K


def perturbed_points(X, k: int, a) -> tuple[np.ndarray, np.ndarray]:
    """Rows shifted by -a_i and +a_i along input coordinate ``k``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    a = np.broadcast_to(np.asarray(a, dtype=float), (X.shape[0],))
    if not 0 <= k < X.shape[1]:
        raise IndexError(f"feature index {k} out of range for d={X.shape[1]}")
    if not np.all(np.isfinite(a)):
        raise DataError("perturbation magnitudes must be finite")
    X_minus = X.copy()
    X_plus = X.copy()
    X_minus[:, k] -= a
    X_plus[:, k] += a
    return X_minus, X_plus


def jitter(M: np.ndarray) -> float:
    """Ridge added once when a Gram-derived matrix fails to factorise."""
    d = np.diag(M)
    scale = float(np.mean(np.abs(d))) if d.size else 0.0
    return 1e-10 * (scale if scale > 0 else 1.0)
