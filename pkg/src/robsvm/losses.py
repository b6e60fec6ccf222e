"""Margin loss catalogue, the extreme empirical loss and a Fisher-consistency probe.

Losses are evaluated at ``u = 1 - y f(x)``. They are used for evaluation
only; every trainer in :mod:`robsvm.svm` uses the hinge loss.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np


class LossKind(str, enum.Enum):
    HINGE = "hinge"
    TRUNCATED_HINGE = "truncated_hinge"
    PINBALL = "pinball"
    PINBALL_EPS_ZONE = "pinball_eps"
    TRUNCATED_PINBALL = "truncated_pinball"
    LEAST_SQUARE = "least_square"


@dataclass(frozen=True)
class LossSpec:
    kind: LossKind = LossKind.HINGE
    a: float = 0.0
    b: float = 0.0
    eps: float = 0.0

    def __post_init__(self):
        kind = LossKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is LossKind.TRUNCATED_HINGE and not self.a >= 1:
            raise ValueError("truncated hinge needs a >= 1")
        if kind is LossKind.PINBALL and not self.a <= 0:
            raise ValueError("pinball needs a <= 0")
        if kind is LossKind.PINBALL_EPS_ZONE and not (self.eps >= 0 and self.a <= 0 and self.b <= 0):
            raise ValueError("pinball with eps zone needs eps >= 0 and a, b <= 0")
        if kind is LossKind.TRUNCATED_PINBALL and not (self.a <= 0 and self.b >= 0):
            raise ValueError("truncated pinball needs a <= 0 and b >= 0")

    @classmethod
    def hinge(cls):
        return cls(LossKind.HINGE)

    @classmethod
    def truncated_hinge(cls, a):
        return cls(LossKind.TRUNCATED_HINGE, a=a)

    @classmethod
    def pinball(cls, a):
        return cls(LossKind.PINBALL, a=a)

    @classmethod
    def pinball_eps(cls, eps, a, b):
        return cls(LossKind.PINBALL_EPS_ZONE, a=a, b=b, eps=eps)

    @classmethod
    def truncated_pinball(cls, a, b):
        return cls(LossKind.TRUNCATED_PINBALL, a=a, b=b)

    @classmethod
    def least_square(cls):
        return cls(LossKind.LEAST_SQUARE)


def loss_eval(spec: LossSpec, u):
    """Vectorised loss value; returns a float for scalar ``u``."""
    u_arr = np.asarray(u, dtype=float)
    k = spec.kind
    if k is LossKind.HINGE:
        out = np.maximum(0.0, u_arr)
    elif k is LossKind.TRUNCATED_HINGE:
        out = np.minimum(np.maximum(0.0, u_arr), spec.a)
    elif k is LossKind.PINBALL:
        out = np.maximum(spec.a * u_arr, u_arr)
    elif k is LossKind.PINBALL_EPS_ZONE:
        out = np.maximum(np.maximum(0.0, u_arr - spec.eps), spec.a * u_arr + spec.b)
    elif k is LossKind.TRUNCATED_PINBALL:
        out = np.maximum(u_arr, np.minimum(spec.a * u_arr, spec.b))
    else:
        out = u_arr * u_arr
    return float(out) if out.ndim == 0 else out


def eel(values, alpha: float) -> float:
    """Extreme empirical loss: ``min_z z + sum(max(v - z, 0)) / (N (1 - alpha))``.

    Evaluated in closed form as the empirical CVaR. With ``m = N (1 - alpha)``
    the value is the sum of the ``floor(m)`` largest values plus the
    fractional part of ``m`` times the next one, divided by ``m``. When ``m``
    is an integer ``r`` (to 1e-9 relative) this is the mean of the top ``r``.
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("eel of an empty vector")
    if not alpha < 1.0:
        raise ValueError("alpha must be < 1")
    if alpha < 0.0:
        raise ValueError("alpha must be >= 0")
    N = v.size
    desc = np.sort(v)[::-1]
    m = N * (1.0 - alpha)
    r = round(m)
    if abs(m - r) <= 1e-9 * N and r >= 1:
        return float(desc[:r].mean())
    k = math.floor(m)
    total = desc[:k].sum() if k else 0.0
    total += (m - k) * desc[k]
    return float(total / m)


def fisher_objective(spec: LossSpec, p: float, q: float, z):
    """Conditional risk ``p L(1 - z) + q L(1 + z)``."""
    z = np.asarray(z, dtype=float)
    return p * loss_eval(spec, 1.0 - z) + q * loss_eval(spec, 1.0 + z)


def fisher_argmin(spec: LossSpec, p: float, q: float, grid=(-3.0, 3.0, 1e-3)) -> float:
    """Grid minimiser of the conditional risk at P(Y=1)=p, P(Y=-1)=q.

    Near-ties (within 1e-12 relative) go to the point closest to
    ``sign(p - q)``. A Fisher-consistent loss returns that sign.
    """
    if p < 0 or q < 0 or abs(p + q - 1.0) > 1e-12:
        raise ValueError(f"need p, q >= 0 with p + q = 1, got p={p}, q={q}")
    if p == q:
        raise ValueError("p == q has no Bayes label")
    z_min, z_max, step = grid
    if not (step > 0 and z_max > z_min):
        raise ValueError("bad grid")
    i0 = math.ceil(z_min / step - 1e-9)
    i1 = math.floor(z_max / step + 1e-9)
    z = np.arange(i0, i1 + 1) * step
    vals = fisher_objective(spec, p, q, z)
    best = vals.min()
    ties = np.flatnonzero(vals <= best + 1e-12 * (1.0 + abs(best)))
    target = 1.0 if p > q else -1.0
    pick = ties[np.argmin(np.abs(z[ties] - target))]
    return float(z[pick])
