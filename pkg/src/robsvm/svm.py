"""C-SVM, single-perturbation SVM and extreme-empirical-loss SVM trainers.

All three are trained through their duals:

C-SVM
    ``min 0.5 a^T T a - 1^T a``,  ``0 <= a <= C``,  ``y^T a = 0``
    with ``T_ij = y_i k(x_i, x_j) y_j``.

SP-SVM
    One dual block per constraint family: the original points and copies of
    them shifted by ``-a`` and ``+a`` along feature ``k``.
    ``min 0.5 v^T T v - 1^T v`` over ``v = [alpha; beta; gamma] >= 0`` with
    ``alpha + beta + gamma <= C`` and ``y^T (alpha + beta + gamma) = 0``;
    ``T`` is the 3N x 3N label-scaled Gram matrix of the stacked points.

EEL-SVM
    ``min 0.5 alpha^T T alpha - 1^T alpha`` over ``(alpha, beta, gamma) >= 0``
    with ``alpha + beta + gamma = D1``, ``y^T alpha = 0`` and
    ``1^T alpha + 1^T beta = D``, where ``D1 = D / (N (1 - level))``.

Bias terms come from complementary slackness, averaged over the points
whose constraint is known to be tight; see the ``_bias_*`` helpers.
"""

from __future__ import annotations

import enum
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .data import Dataset, RescaleParams, fit_rescale
from .errors import DataError, SolverError
from .kernels import KernelKind, KernelSpec, gram, perturbed_points
from .losses import eel
from .noise import NoiseSpec, PerturbationVector, compute_perturbation, select_noisy_feature
from .qp import QPStatus, QuadraticProgram, QPSolution, require_optimal, solve, solve_box_single_equality

FORMAT_VERSION = 1

# support-set threshold, relative to the box size (C or D1)
TAU = 1e-8
AUTO_SMO_ROWS = 1500  # beyond this the dense interior-point factorisation gets costly


class Variant(str, enum.Enum):
    CSVM = "csvm"
    SPSVM = "spsvm"
    EELSVM = "eelsvm"


@dataclass(frozen=True)
class TrainedModel:
    variant: Variant
    kernel: KernelSpec
    support_data: np.ndarray
    support_labels: np.ndarray
    alpha: np.ndarray
    bias: float
    hyperparams: dict
    beta: Optional[np.ndarray] = None
    gamma_coef: Optional[np.ndarray] = None
    z_star: Optional[float] = None
    perturbation: Optional[PerturbationVector] = None
    rescale: Optional[RescaleParams] = None
    dual_objective: float = float("nan")
    bias_rule: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        for name in ("support_data", "support_labels", "alpha", "beta", "gamma_coef"):
            v = getattr(self, name)
            if v is not None:
                v = np.array(v, dtype=float, copy=True)
                v.flags.writeable = False
                object.__setattr__(self, name, v)

    @property
    def n_train(self) -> int:
        return self.support_data.shape[0]

    @property
    def d(self) -> int:
        return self.support_data.shape[1]

    def expansion(self) -> tuple[np.ndarray, np.ndarray]:
        """Points and signed weights with ``f(x) = sum_j w_j k(p_j, x) + b``."""
        if "expansion" not in self._cache:
            X, y = self.support_data, self.support_labels
            if self.variant is Variant.SPSVM:
                Xm, Xp = perturbed_points(X, self.perturbation.feature_index, self.perturbation.magnitudes)
                pts = np.vstack([X, Xm, Xp])
                w = np.concatenate([y * self.alpha, y * self.beta, y * self.gamma_coef])
            else:
                pts, w = X, y * self.alpha
            keep = w != 0.0
            self._cache["expansion"] = (pts[keep], w[keep])
        return self._cache["expansion"]

    def weights(self) -> np.ndarray:
        """Primal weight vector; linear kernel only."""
        if self.kernel.kind is not KernelKind.LINEAR:
            raise ValueError("explicit weights exist only for the linear kernel")
        pts, w = self.expansion()
        return w @ pts if w.size else np.zeros(self.d)

    def decision_raw(self, X) -> np.ndarray:
        """Decision values for inputs already in the model's (rescaled) space."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.d:
            raise DataError(f"model expects {self.d} features, got {X.shape[1]}")
        if self.kernel.kind is KernelKind.LINEAR:
            return X @ self.weights() + self.bias
        pts, w = self.expansion()
        if not w.size:
            return np.full(X.shape[0], self.bias)
        return gram(self.kernel, X, pts) @ w + self.bias

    def invariant_violations(self, tol: float = 1e-6) -> list:
        """Dual feasibility checks; an empty list means all hold."""
        out = []
        y = self.support_labels
        a = self.alpha
        hp = self.hyperparams
        coeffs = [("alpha", a)]
        if self.beta is not None:
            coeffs += [("beta", self.beta), ("gamma", self.gamma_coef)]
        for name, v in coeffs:
            if v.min() < -tol:
                out.append(f"{name} has entry {v.min():.3e} < 0")
        if self.variant is Variant.CSVM:
            if a.max() > hp["C"] + tol:
                out.append(f"alpha exceeds C by {a.max() - hp['C']:.3e}")
            if abs(y @ a) > tol:
                out.append(f"y^T alpha = {y @ a:.3e}")
        elif self.variant is Variant.SPSVM:
            tot = a + self.beta + self.gamma_coef
            if tot.max() > hp["C"] + tol:
                out.append(f"alpha+beta+gamma exceeds C by {tot.max() - hp['C']:.3e}")
            if abs(y @ tot) > tol:
                out.append(f"y^T (alpha+beta+gamma) = {y @ tot:.3e}")
        else:
            D, D1 = hp["D"], hp["D1"]
            tot = a + self.beta + self.gamma_coef
            if np.max(np.abs(tot - D1)) > tol:
                out.append(f"alpha+beta+gamma deviates from D1 by {np.max(np.abs(tot - D1)):.3e}")
            if abs(y @ a) > tol:
                out.append(f"y^T alpha = {y @ a:.3e}")
            if abs(a.sum() + self.beta.sum() - D) > tol:
                out.append(f"1^T alpha + 1^T beta - D = {a.sum() + self.beta.sum() - D:.3e}")
        return out

    # ---------------------------------------------------------------- io
    def to_dict(self) -> dict:
        arr = lambda v: None if v is None else [float(t) for t in np.ravel(v)]  # noqa: E731
        return {
            "format": "robsvm-model",
            "format_version": FORMAT_VERSION,
            "variant": self.variant.value,
            "kernel": self.kernel.to_dict(),
            "hyperparams": self.hyperparams,
            "bias": float(self.bias),
            "bias_rule": self.bias_rule,
            "z_star": self.z_star,
            "dual_objective": float(self.dual_objective),
            "support_data": [[float(t) for t in row] for row in self.support_data],
            "support_labels": arr(self.support_labels),
            "alpha": arr(self.alpha),
            "beta": arr(self.beta),
            "gamma": arr(self.gamma_coef),
            "perturbation": None if self.perturbation is None else self.perturbation.to_dict(),
            "rescale": None if self.rescale is None else self.rescale.to_dict(),
        }

    @classmethod
    def from_dict(cls, d) -> "TrainedModel":
        if d.get("format") != "robsvm-model":
            raise DataError("not a robsvm model document")
        if d.get("format_version") != FORMAT_VERSION:
            raise DataError(f"unsupported model format version {d.get('format_version')}")
        opt = lambda v: None if v is None else np.array(v, dtype=float)  # noqa: E731
        return cls(
            variant=Variant(d["variant"]),
            kernel=KernelSpec.from_dict(d["kernel"]),
            support_data=np.array(d["support_data"], dtype=float),
            support_labels=np.array(d["support_labels"], dtype=float),
            alpha=np.array(d["alpha"], dtype=float),
            bias=float(d["bias"]),
            hyperparams=dict(d["hyperparams"]),
            beta=opt(d.get("beta")),
            gamma_coef=opt(d.get("gamma")),
            z_star=d.get("z_star"),
            perturbation=None if d.get("perturbation") is None else PerturbationVector.from_dict(d["perturbation"]),
            rescale=None if d.get("rescale") is None else RescaleParams.from_dict(d["rescale"]),
            dual_objective=float(d.get("dual_objective", float("nan"))),
            bias_rule=d.get("bias_rule", ""),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "TrainedModel":
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read model file {path}: {exc}") from None
        return cls.from_dict(doc)


def predict(model: TrainedModel, X) -> tuple[np.ndarray, np.ndarray]:
    """Labels and decision values; sign(0) is taken as +1."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.d:
        raise DataError(f"model expects {model.d} features, got {X.shape[1]}")
    if model.rescale is not None:
        X = model.rescale.apply(X)
    f = model.decision_raw(X)
    return np.where(f >= 0, 1.0, -1.0), f


# --------------------------------------------------------------------------
# dual problem construction

def _check_trainable(ds: Dataset):
    counts = ds.class_counts()
    if counts[1] == 0 or counts[-1] == 0:
        raise DataError("training data must contain both classes")


def label_scaled(K, y) -> np.ndarray:
    return y[:, None] * K * y[None, :]


def csvm_qp(ds: Dataset, C: float, kernel: KernelSpec) -> QuadraticProgram:
    N = ds.n
    y = ds.labels
    T = label_scaled(gram(kernel, ds.features), y)
    return QuadraticProgram(T, -np.ones(N), y[None, :], np.zeros(1), None, None,
                            np.zeros(N), np.full(N, float(C)))


def _sp_points(ds: Dataset, pert: PerturbationVector) -> np.ndarray:
    Xm, Xp = perturbed_points(ds.features, pert.feature_index, pert.magnitudes)
    return np.vstack([ds.features, Xm, Xp])


def spsvm_qp(ds: Dataset, C: float, kernel: KernelSpec, pert: PerturbationVector) -> QuadraticProgram:
    N = ds.n
    y3 = np.tile(ds.labels, 3)
    T = label_scaled(gram(kernel, _sp_points(ds, pert)), y3)
    A_in = np.hstack([np.eye(N)] * 3)
    return QuadraticProgram(T, -np.ones(3 * N), y3[None, :], np.zeros(1), A_in, np.full(N, float(C)),
                            np.zeros(3 * N), np.full(3 * N, float(C)))


def eel_box(D: float, N: int, level: float) -> float:
    return D / (N * (1.0 - level))


def eelsvm_qp(ds: Dataset, D: float, kernel: KernelSpec, level: float) -> QuadraticProgram:
    N = ds.n
    y = ds.labels
    D1 = eel_box(D, N, level)
    T = label_scaled(gram(kernel, ds.features), y)
    Q = np.zeros((3 * N, 3 * N))
    Q[:N, :N] = T
    c = np.concatenate([-np.ones(N), np.zeros(2 * N)])
    A_eq = np.zeros((N + 2, 3 * N))
    A_eq[:N] = np.hstack([np.eye(N)] * 3)
    A_eq[N, :N] = y
    A_eq[N + 1, :2 * N] = 1.0
    b_eq = np.concatenate([np.full(N, D1), [0.0, float(D)]])
    return QuadraticProgram(Q, c, A_eq, b_eq, None, None, np.zeros(3 * N), np.full(3 * N, D1))


def eelsvm_reduced_qp(ds: Dataset, D: float, kernel: KernelSpec, level: float) -> QuadraticProgram:
    """Equivalent N-variable dual: ``0 <= a <= D1``, ``y^T a = 0``, ``1^T a <= D``."""
    N = ds.n
    y = ds.labels
    D1 = eel_box(D, N, level)
    T = label_scaled(gram(kernel, ds.features), y)
    return QuadraticProgram(T, -np.ones(N), y[None, :], np.zeros(1), np.ones((1, N)), np.array([float(D)]),
                            np.zeros(N), np.full(N, D1))


def _scaled(qp: QuadraticProgram, s: float) -> QuadraticProgram:
    """Substitute ``x = s u`` and divide the objective by ``s``."""
    return QuadraticProgram(s * qp.Q, qp.c, qp.A_eq, qp.b_eq / s, qp.A_in, qp.b_in / s,
                            qp.lower / s, qp.upper / s)


def _solve_scaled(qp: QuadraticProgram, s: float, what: str, tol: float) -> tuple[np.ndarray, QPSolution]:
    sol = solve(_scaled(qp, s), tol_kkt=tol, check_feasibility=False)
    require_optimal(sol, what)
    return s * sol.x, sol


# --------------------------------------------------------------------------
# bias recovery

def _midpoint(lower_vals, upper_vals) -> float:
    lo = max(lower_vals) if len(lower_vals) else None
    hi = min(upper_vals) if len(upper_vals) else None
    if lo is not None and hi is not None:
        return 0.5 * (lo + hi)
    if lo is not None:
        return lo
    if hi is not None:
        return hi
    return 0.0


def _bias_margin(alpha, y, g, box) -> tuple[float, str]:
    """Average ``y_j - g_j`` over free SVs, else midpoint of the feasible interval."""
    t = TAU * box
    free = (alpha > t) & (alpha < box - t)
    if free.any():
        return float(np.mean(y[free] - g[free])), "margin"
    at0 = alpha <= t
    atC = ~at0 & ~free
    r = y - g
    lower = r[((y > 0) & at0) | ((y < 0) & atC)]
    upper = r[((y > 0) & atC) | ((y < 0) & at0)]
    return _midpoint(lower, upper), "interval"


def _bias_sp(theta, y, g3, C) -> tuple[float, str]:
    """Largest of the three tight-constraint sets; ``g3`` has shape (3, N)."""
    t = TAU * C
    slack = C - theta.sum(axis=0)
    sets = [(theta[l] > t) & (slack > t) for l in range(3)]
    sizes = [int(s.sum()) for s in sets]
    l = int(np.argmax(sizes))
    if sizes[l]:
        S = sets[l]
        return float(np.mean(y[S] - g3[l, S])), f"S{l}"
    r = y[None, :] - g3
    lower, upper = [], []
    inside = slack > t
    for i in np.flatnonzero(inside):
        (lower if y[i] > 0 else upper).extend(r[:, i])
    for i in np.flatnonzero(~inside):
        act = theta[:, i] > t
        (upper if y[i] > 0 else lower).extend(r[act, i])
    return _midpoint(lower, upper), "interval"


def _bias_eel(a, b, c, y, g, D1) -> tuple[float, str]:
    t = TAU * D1
    S3 = (a > t) & (b > t) & (c > t)
    S4 = (a > t) & (b > t) & (c <= t)
    n3, n4 = int(S3.sum()), int(S4.sum())
    if n3 and n4 <= n3:
        return float(np.mean(y[S3] - g[S3])), "S3"
    if n4:
        return float(np.mean(y[S4] - g[S4])), "S4"
    b_val, rule = _bias_margin(a, y, g, D1)
    return b_val, rule


def _check(model: TrainedModel, tol: float = 1e-6) -> TrainedModel:
    bad = model.invariant_violations(tol)
    if bad:
        raise SolverError(f"{model.variant.value} dual solution violates: " + "; ".join(bad))
    return model


def _prepare(ds: Dataset, rescale: bool):
    _check_trainable(ds)
    if rescale:
        params = fit_rescale(ds)
        return ds.with_features(params.apply(ds.features)), params
    return ds, None


# --------------------------------------------------------------------------
# trainers

def train_csvm(ds: Dataset, C: float, kernel: KernelSpec = KernelSpec(), *, rescale: bool = False,
               solver: str = "auto", tol: float = 1e-6) -> TrainedModel:
    """Soft-margin SVM with hinge loss.

    ``solver`` is ``"ipm"`` (general interior-point solver), ``"smo"``
    (pairwise decomposition) or ``"auto"``: the interior-point solver up to
    ``AUTO_SMO_ROWS`` rows, decomposition above, falling back to the
    interior-point solver if decomposition stalls. With ``rescale=True``
    features are mapped to [-1, 1] using ``ds`` and the same map is applied
    at prediction time.
    """
    if not C > 0:
        raise ValueError("C must be positive")
    if solver not in ("auto", "smo", "ipm"):
        raise ValueError(f"unknown solver {solver!r}")
    ds, params = _prepare(ds, rescale)
    qp = csvm_qp(ds, C, kernel)
    y = ds.labels
    if solver == "auto":
        solver = "smo" if ds.n > AUTO_SMO_ROWS else "ipm"
        fallback = True
    else:
        fallback = False
    alpha = None
    if solver == "smo":
        sol = solve_box_single_equality(C * qp.Q, qp.c, y, np.ones(ds.n), tol_kkt=tol)
        if sol.status is QPStatus.OPTIMAL:
            alpha = C * sol.x
        elif not fallback:
            require_optimal(sol, "C-SVM dual")
    if alpha is None:
        alpha, sol = _solve_scaled(qp, C, "C-SVM dual", tol)
    K = gram(kernel, ds.features)
    g = K @ (y * alpha)
    bias, rule = _bias_margin(alpha, y, g, C)
    model = TrainedModel(
        Variant.CSVM, kernel, ds.features, y, alpha, bias,
        hyperparams={"C": float(C), **_kernel_hp(kernel)},
        rescale=params, dual_objective=-qp.objective(alpha), bias_rule=rule,
    )
    return _check(model)


def train_spsvm(ds: Dataset, C: float, kernel: KernelSpec = KernelSpec(), noise: NoiseSpec = NoiseSpec(),
                k: Optional[int] = None, *, rescale: bool = False, tol: float = 1e-6,
                perturbation: Optional[PerturbationVector] = None) -> TrainedModel:
    """Single-perturbation SVM: robust to noise on one input feature.

    ``k`` defaults to the feature with the largest sample standard deviation.
    An explicit ``perturbation`` overrides the quantile-times-std recipe
    (and ``k``).
    """
    if not C > 0:
        raise ValueError("C must be positive")
    ds, params = _prepare(ds, rescale)
    if perturbation is not None:
        pert = perturbation
        k = pert.feature_index
        if pert.magnitudes.size != ds.n:
            raise DataError("perturbation length must equal the number of training rows")
    else:
        if k is None:
            k = select_noisy_feature(ds)
        pert = compute_perturbation(ds, k, noise)
    if np.all(pert.magnitudes == 0):
        warnings.warn("zero perturbation: SP-SVM coincides with C-SVM", RuntimeWarning, stacklevel=2)
    qp = spsvm_qp(ds, C, kernel, pert)
    v, _ = _solve_scaled(qp, C, "SP-SVM dual", tol)
    N = ds.n
    y = ds.labels
    theta = v.reshape(3, N)
    K = gram(kernel, _sp_points(ds, pert))
    y3 = np.tile(y, 3)
    g3 = (K @ (y3 * v)).reshape(3, N)
    bias, rule = _bias_sp(theta, y, g3, C)
    model = TrainedModel(
        Variant.SPSVM, kernel, ds.features, y, theta[0], bias,
        hyperparams={"C": float(C), "alpha_level": noise.alpha_level, "noise": noise.family.value,
                     "dof": noise.dof, "feature_index": int(k), **_kernel_hp(kernel)},
        beta=theta[1], gamma_coef=theta[2], perturbation=pert, rescale=params,
        dual_objective=-qp.objective(v), bias_rule=rule,
    )
    return _check(model)


def train_eelsvm(ds: Dataset, D: float, kernel: KernelSpec = KernelSpec(), alpha: float = 0.0, *,
                 rescale: bool = False, tol: float = 1e-6) -> TrainedModel:
    """Extreme-empirical-loss SVM: penalises the CVaR of hinge violations at ``alpha``."""
    if not D > 0:
        raise ValueError("D must be positive")
    if not 0.0 <= alpha < 1.0:
        raise ValueError("alpha must lie in [0, 1)")
    ds, params = _prepare(ds, rescale)
    N = ds.n
    D1 = eel_box(D, N, alpha)
    qp = eelsvm_qp(ds, D, kernel, alpha)
    v, _ = _solve_scaled(qp, D1, "EEL-SVM dual", tol)
    a, b, c = v.reshape(3, N)
    y = ds.labels
    g = gram(kernel, ds.features) @ (y * a)
    bias, rule = _bias_eel(a, b, c, y, g, D1)
    model = TrainedModel(
        Variant.EELSVM, kernel, ds.features, y, a, bias,
        hyperparams={"D": float(D), "alpha": float(alpha), "D1": D1, **_kernel_hp(kernel)},
        beta=b, gamma_coef=c, z_star=0.0, rescale=params,
        dual_objective=-qp.objective(v), bias_rule=rule,
    )
    return _check(model)


def _kernel_hp(kernel: KernelSpec) -> dict:
    return {"kernel": kernel.kind.value, "gamma": kernel.gamma if kernel.kind is KernelKind.RBF else None}


# --------------------------------------------------------------------------
# diagnostics

def primal_objective(model: TrainedModel) -> float:
    """Primal objective of the trained (w, b) on its own training data.

    The slack variables are set to their optimal values given (w, b); for
    EEL-SVM the free threshold ``z`` is minimised out, which turns the
    penalty into ``D * eel(hinge, alpha)``.
    """
    X, y = model.support_data, model.support_labels
    pts, w = model.expansion()
    K = gram(model.kernel, pts) if w.size else np.zeros((0, 0))
    ww = float(w @ K @ w) if w.size else 0.0
    hp = model.hyperparams
    if model.variant is Variant.SPSVM:
        allpts = _sp_points(Dataset(X, y), model.perturbation)
        f = model.decision_raw(allpts).reshape(3, -1)
        xi = np.maximum(0.0, (1.0 - y[None, :] * f).max(axis=0))
        return 0.5 * ww + hp["C"] * float(xi.sum())
    f = model.decision_raw(X)
    hinge = np.maximum(0.0, 1.0 - y * f)
    if model.variant is Variant.CSVM:
        return 0.5 * ww + hp["C"] * float(hinge.sum())
    return 0.5 * ww + hp["D"] * eel(hinge, hp["alpha"])


def train(variant, ds: Dataset, kernel: KernelSpec = KernelSpec(), **params) -> TrainedModel:
    """Dispatch on ``variant`` with keyword hyper-parameters.

    csvm: ``C``; spsvm: ``C``, ``alpha`` (noise level), optional ``noise``
    (a family name or a full ``NoiseSpec``), ``dof``, ``k``; eelsvm: ``D``, ``alpha``. ``rescale`` is passed through.
    """
    variant = Variant(variant)
    rescale = params.pop("rescale", False)
    if variant is Variant.CSVM:
        return train_csvm(ds, params["C"], kernel, rescale=rescale)
    if variant is Variant.SPSVM:
        noise = params.get("noise", "gaussian")
        if not isinstance(noise, NoiseSpec):
            noise = NoiseSpec(noise, params.get("dof", 5.0), params.get("alpha", 0.5))
        return train_spsvm(ds, params["C"], kernel, noise, params.get("k"), rescale=rescale)
    return train_eelsvm(ds, params["D"], kernel, params.get("alpha", 0.0), rescale=rescale)
