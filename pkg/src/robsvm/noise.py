"""Noise model behind the single-perturbation constraint.

The chance constraint on feature ``k`` becomes deterministic once the noise
quantile is known; with a symmetric continuous noise law the shift applied
to each training point is ``a_k = quantile(alpha) * sample_std(x_k)``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, ndtri, stdtr, stdtrit

from .data import Dataset
from .errors import DataError


class NoiseFamily(str, enum.Enum):
    GAUSSIAN = "gaussian"
    STUDENT_T = "t"


@dataclass(frozen=True)
class NoiseSpec:
    family: NoiseFamily = NoiseFamily.GAUSSIAN
    dof: float = 5.0
    alpha_level: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "family", NoiseFamily(self.family))
        if not self.dof > 0:
            raise ValueError("dof must be positive")
        if not 0.5 <= self.alpha_level < 1.0:
            raise ValueError(f"alpha_level must lie in [0.5, 1), got {self.alpha_level}")

    def to_dict(self) -> dict:
        return {"family": self.family.value, "dof": self.dof, "alpha_level": self.alpha_level}

    @classmethod
    def from_dict(cls, d) -> "NoiseSpec":
        return cls(NoiseFamily(d["family"]), float(d["dof"]), float(d["alpha_level"]))


@dataclass(frozen=True)
class PerturbationVector:
    feature_index: int
    magnitudes: np.ndarray

    def __post_init__(self):
        m = np.array(self.magnitudes, dtype=float).ravel()
        if np.any(m < 0) or not np.all(np.isfinite(m)):
            raise ValueError("perturbation magnitudes must be finite and non-negative")
        m.flags.writeable = False
        object.__setattr__(self, "magnitudes", m)

    def to_dict(self) -> dict:
        return {"feature_index": int(self.feature_index), "magnitudes": [float(v) for v in self.magnitudes]}

    @classmethod
    def from_dict(cls, d) -> "PerturbationVector":
        return cls(int(d["feature_index"]), np.array(d["magnitudes"], dtype=float))


def _t_logpdf(t, dof):
    return (gammaln(0.5 * (dof + 1)) - gammaln(0.5 * dof) - 0.5 * math.log(dof * math.pi)
            - 0.5 * (dof + 1) * math.log1p(t * t / dof))


def _t_lower_quantile(dof, p):
    # p <= 0.5; Newton on the CDF polishes the library inverse
    q = float(stdtrit(dof, p))
    for _ in range(3):
        f = float(stdtr(dof, q)) - p
        dens = math.exp(_t_logpdf(q, dof))
        if dens == 0.0 or f == 0.0:
            break
        q_new = q - f / dens
        if not math.isfinite(q_new):
            break
        q = q_new
    return q


def quantile(family, dof: float, p: float) -> float:
    """Inverse CDF of the standard noise law at ``p`` in (0, 1).

    Gaussian uses ``ndtri``; Student-t starts from ``stdtrit`` and is
    refined by Newton steps on the CDF evaluated in the lower tail, which
    brings the absolute error to about 1e-13 away from the extreme tails.
    """
    family = NoiseFamily(family)
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    if family is NoiseFamily.GAUSSIAN:
        return float(ndtri(p))
    if not dof > 0:
        raise ValueError("dof must be positive")
    if p == 0.5:
        return 0.0
    if p > 0.5:
        return -_t_lower_quantile(dof, 1.0 - p)
    return _t_lower_quantile(dof, p)


def assumption1_check(family, dof: float, alpha_level: float, tol: float = 1e-9) -> bool:
    """True when the alpha and (1 - alpha) quantiles cancel.

    For continuous laws the lower and upper generalised inverses coincide,
    so one quantile function serves both.
    """
    if alpha_level <= 0.0 or alpha_level >= 1.0:
        # a quantile at 0 or 1 is infinite; the cancellation is undefined
        return False
    return abs(quantile(family, dof, alpha_level) + quantile(family, dof, 1.0 - alpha_level)) <= tol


def compute_perturbation(ds: Dataset, k: int, spec: NoiseSpec) -> PerturbationVector:
    """Homoscedastic shift ``quantile(alpha_level) * std(x_k)`` (N - 1 denominator)."""
    if ds.n < 2:
        raise DataError("need N >= 2 to estimate the feature standard deviation")
    if not 0 <= k < ds.d:
        raise IndexError(f"feature index {k} out of range for d={ds.d}")
    sd = float(np.std(ds.features[:, k], ddof=1))
    if sd == 0.0:
        warnings.warn(f"feature {k} is constant; perturbation is zero and SP-SVM reduces to C-SVM",
                      RuntimeWarning, stacklevel=2)
    a_hat = quantile(spec.family, spec.dof, spec.alpha_level) * sd
    a_hat = max(a_hat, 0.0)
    return PerturbationVector(k, np.full(ds.n, a_hat))


def select_noisy_feature(ds: Dataset) -> int:
    """Index of the feature with the largest sample std; lowest index on ties."""
    if ds.n < 2:
        raise DataError("need N >= 2 to compare feature standard deviations")
    sd = np.std(ds.features, axis=0, ddof=1)
    return int(np.flatnonzero(sd == sd.max())[0])
