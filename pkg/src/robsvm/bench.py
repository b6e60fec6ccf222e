"""Synthetic benchmark against a known Bayes boundary, SNR contamination and CV tuning.

Random streams
--------------
Every stochastic operation takes an integer seed and draws from numpy's
PCG64 generator seeded with ``SeedSequence([seed, stream])``, where
``stream`` is a fixed per-operation constant (generation 0, contamination 1,
awgn 2, fold assignment 3). Two operations given the same seed therefore
never share a stream. Normals come from numpy's ziggurat sampler. The
benchmark uses ``seed + rep`` for repetition ``rep``.

Penalties
---------
For EEL-SVM the harness takes a per-sample penalty ``C`` and trains with
``D = C * N`` where ``N`` is the size of the training set actually fitted.
"""

from __future__ import annotations

import csv
import enum
import io
import itertools
import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .data import Dataset
from .errors import DataError, RobSVMError, VerticalBoundary
from .kernels import KernelKind, KernelSpec
from .noise import NoiseFamily, NoiseSpec
from .svm import TrainedModel, Variant, predict, train_csvm, train_eelsvm, train_spsvm

M0, Q0 = 2.5, 0.0

_STREAM_GEN, _STREAM_CONT, _STREAM_AWGN, _STREAM_FOLDS = 0, 1, 2, 3


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), stream])))


def _labels(rng, n) -> np.ndarray:
    return np.where(rng.random(n) < 0.5, 1.0, -1.0)


# --------------------------------------------------------------------------
# data generation

@dataclass(frozen=True)
class SyntheticSpec:
    n: int
    seed: int = 0
    mu: tuple = (0.5, -3.0)
    sigma_diag: tuple = (0.2, 3.0)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if len(self.mu) != 2 or len(self.sigma_diag) != 2 or min(self.sigma_diag) <= 0:
            raise ValueError("mu and sigma_diag must be 2-vectors with positive variances")


def gen_synthetic(spec: SyntheticSpec) -> Dataset:
    """Two Gaussian classes ``N(+-mu, diag(sigma))`` with Bernoulli(1/2) labels.

    Labels are drawn first, then an ``n x 2`` block of standard normals.
    """
    rng = _rng(spec.seed, _STREAM_GEN)
    y = _labels(rng, spec.n)
    Z = rng.standard_normal((spec.n, 2))
    X = y[:, None] * np.asarray(spec.mu, dtype=float) + Z * np.sqrt(np.asarray(spec.sigma_diag, dtype=float))
    return Dataset(X, y, ("x1", "x2"))


class ContaminationFamily(str, enum.Enum):
    NORMAL = "normal"
    T5 = "t5"
    T1 = "t1"

    @property
    def dof(self) -> Optional[float]:
        return {"normal": None, "t5": 5.0, "t1": 1.0}[self.value]


@dataclass(frozen=True)
class ContaminationSpec:
    ratio: float
    family: ContaminationFamily = ContaminationFamily.NORMAL
    sigma_c: tuple = ((1.0, -0.8), (-0.8, 1.0))
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "family", ContaminationFamily(self.family))
        if not 0.0 <= self.ratio <= 1.0:
            raise ValueError("ratio must lie in [0, 1]")
        S = np.asarray(self.sigma_c, dtype=float)
        if S.shape != (2, 2) or not np.allclose(S, S.T, atol=0, rtol=0):
            raise ValueError("sigma_c must be a symmetric 2 x 2 matrix")
        try:
            np.linalg.cholesky(S)
        except np.linalg.LinAlgError:
            raise ValueError("sigma_c must be positive definite") from None


def n_contaminated(ratio: float, n: int) -> int:
    # round first so that e.g. 0.1 * 30 does not become 4 through 3.0000000000000004
    return int(math.ceil(round(ratio * n, 9)))


def contaminate_synthetic(ds: Dataset, spec: ContaminationSpec) -> Dataset:
    """Replace ``ceil(r N)`` random rows by elliptical outliers centred at the origin.

    Draw order: row indices (without replacement), Gaussian block, chi-square
    mixing variables (t families only), then the new labels.
    """
    if ds.d != 2:
        raise DataError("contamination is defined for two features")
    m = n_contaminated(spec.ratio, ds.n)
    if m == 0:
        return ds
    rng = _rng(spec.seed, _STREAM_CONT)
    idx = np.sort(rng.choice(ds.n, size=m, replace=False))
    L = np.linalg.cholesky(np.asarray(spec.sigma_c, dtype=float))
    Z = rng.standard_normal((m, 2)) @ L.T
    dof = spec.family.dof
    if dof is not None:
        Z *= np.sqrt(dof / rng.chisquare(dof, size=m))[:, None]
    X = ds.features.copy()
    y = ds.labels.copy()
    X[idx] = Z
    y[idx] = _labels(rng, m)
    return Dataset(X, y, ds.feature_names)


def awgn(ds: Dataset, snr_db: float, seed: int = 0) -> Dataset:
    """Add white Gaussian noise at ``snr_db`` per feature column.

    Column power is the mean square; the noise variance is
    ``P / 10**(snr_db / 10)``. All-zero columns stay untouched.
    """
    if not math.isfinite(snr_db):
        raise ValueError("snr_db must be finite")
    X = ds.features
    P = np.mean(X * X, axis=0)
    sd = np.sqrt(P / 10.0 ** (snr_db / 10.0))
    noise = _rng(seed, _STREAM_AWGN).standard_normal(X.shape) * sd
    return Dataset(X + noise, ds.labels, ds.feature_names)


# --------------------------------------------------------------------------
# boundaries

@dataclass(frozen=True)
class BoundaryEstimate:
    m: float
    q: float

    def __post_init__(self):
        if not (math.isfinite(self.m) and math.isfinite(self.q)):
            raise VerticalBoundary("boundary slope/intercept not finite")


def boundary_from_weights(w, b) -> BoundaryEstimate:
    """``w1 x1 + w2 x2 + b = 0`` rewritten as ``x2 = m x1 + q``."""
    w = np.asarray(w, dtype=float).ravel()
    if w.size != 2:
        raise DataError("boundary extraction needs exactly two features")
    if abs(w[1]) < 1e-12:
        raise VerticalBoundary(f"w2 = {w[1]:.3e}: boundary is vertical")
    return BoundaryEstimate(float(-w[0] / w[1]), float(-b / w[1]))


def extract_linear_boundary(model: TrainedModel) -> BoundaryEstimate:
    if model.kernel.kind is not KernelKind.LINEAR:
        raise ValueError("boundary extraction needs a linear kernel")
    if model.rescale is not None:
        raise ValueError("boundary extraction is defined in the original coordinates; train without rescaling")
    return boundary_from_weights(model.weights(), model.bias)


def bayes_distance(estimates: Sequence, m0: float = M0, q0: float = Q0) -> float:
    """``|mean(m) - m0| * sd(m) + |mean(q) - q0| * sd(q)`` with N - 1 denominators."""
    E = np.array([(e.m, e.q) if isinstance(e, BoundaryEstimate) else tuple(e) for e in estimates], dtype=float)
    if E.ndim != 2 or E.shape[0] < 2:
        raise ValueError("bayes_distance needs at least two estimates")
    # sorting makes the floating-point sums independent of the input order
    m = np.sort(E[:, 0])
    q = np.sort(E[:, 1])
    return float(abs(m.mean() - m0) * m.std(ddof=1) + abs(q.mean() - q0) * q.std(ddof=1))


def accuracy(model: TrainedModel, test: Dataset) -> float:
    labels, _ = predict(model, test.features)
    return float(np.mean(labels == test.labels))


# --------------------------------------------------------------------------
# tuning

@dataclass(frozen=True)
class TuningGrid:
    """Named value lists; combinations enumerate in key order, last key fastest."""

    values: dict

    def __post_init__(self):
        vals = {str(k): tuple(float(x) for x in v) for k, v in dict(self.values).items()}
        if not vals or any(len(v) == 0 for v in vals.values()):
            raise ValueError("tuning grid must be non-empty")
        object.__setattr__(self, "values", vals)

    def combinations(self) -> list:
        keys = list(self.values)
        return [dict(zip(keys, combo)) for combo in itertools.product(*(self.values[k] for k in keys))]

    def __len__(self):
        return math.prod(len(v) for v in self.values.values())


def sp_alpha_grid() -> tuple:
    return tuple(round(0.50 + 0.01 * i, 2) for i in range(11))


def eel_alpha_grid(ratio: float) -> tuple:
    """{0, 0.01, 0.02} without contamination, extended in 0.01 steps up to r."""
    top = max(2, int(math.ceil(round(ratio * 100, 6))))
    return tuple(round(0.01 * i, 2) for i in range(top + 1))


def default_synthetic_grids(ratio: float, C: float = 100.0) -> dict:
    return {
        Variant.CSVM: TuningGrid({"C": (C,)}),
        Variant.SPSVM: TuningGrid({"C": (C,), "alpha": sp_alpha_grid()}),
        Variant.EELSVM: TuningGrid({"C": (C,), "alpha": eel_alpha_grid(ratio)}),
    }


def default_real_data_grids() -> dict:
    """RBF grids used for the real-data comparison."""
    pw = lambda ks: tuple(2.0 ** k for k in ks)  # noqa: E731
    C_other = pw((-5, -3, -1, 0, 1, 3, 5))
    g_other = pw((-7, -5, -3, -1, 0, 1))
    return {
        Variant.CSVM: TuningGrid({"C": pw(range(-9, 10)), "gamma": pw(range(-9, 10))}),
        Variant.SPSVM: TuningGrid({"C": C_other, "gamma": g_other,
                                   "alpha": (0.50, 0.51, 0.52, 0.53, 0.54, 0.55, 0.56, 0.58, 0.60)}),
        Variant.EELSVM: TuningGrid({"C": C_other, "gamma": g_other,
                                    "alpha": (0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3)}),
    }


def fit(method, ds: Dataset, params: dict, kernel: KernelSpec = KernelSpec(),
        noise_family: NoiseFamily = NoiseFamily.GAUSSIAN, dof: float = 5.0,
        feature_index: Optional[int] = None) -> TrainedModel:
    """Train ``method`` with a parameter dict as produced by ``TuningGrid``.

    A ``gamma`` entry switches to an RBF kernel with that width.
    """
    method = Variant(method)
    if "gamma" in params:
        kernel = KernelSpec.rbf(params["gamma"])
    C = params["C"]
    if method is Variant.CSVM:
        return train_csvm(ds, C, kernel)
    if method is Variant.SPSVM:
        noise = NoiseSpec(noise_family, dof, params.get("alpha", 0.5))
        with warnings.catch_warnings():
            warnings.filterwarnings("ignore", message="zero perturbation")
            return train_spsvm(ds, C, kernel, noise, feature_index)
    return train_eelsvm(ds, C * ds.n, kernel, params.get("alpha", 0.0))


def fold_assignment(labels, folds: int, seed: int = 0) -> np.ndarray:
    """Fold id per row; stratified when every class has at least ``folds`` rows.

    Stratified: each class is shuffled and the classes are dealt out in turn,
    so fold class counts differ by at most one. Otherwise all rows are
    shuffled and dealt out, with a warning.
    """
    y = np.asarray(labels)
    n = y.size
    if folds < 2 or folds > n:
        raise ValueError(f"need 2 <= folds <= N, got folds={folds}, N={n}")
    rng = _rng(seed, _STREAM_FOLDS)
    classes = [np.flatnonzero(y == c) for c in (-1.0, 1.0)]
    if all(c.size >= folds or c.size == 0 for c in classes):
        order = np.concatenate([rng.permutation(c) for c in classes])
    else:
        warnings.warn("a class has fewer rows than folds; using unstratified folds", RuntimeWarning, stacklevel=2)
        order = rng.permutation(n)
    out = np.empty(n, dtype=int)
    out[order] = np.arange(n) % folds
    return out


@dataclass(frozen=True)
class CVResult:
    best: dict
    scores: tuple  # (params, mean accuracy) in grid order


def _fold_accuracy(method, train: Dataset, test: Dataset, params, **fit_kw) -> float:
    counts = train.class_counts()
    if counts[1] == 0 or counts[-1] == 0:
        # a single-class training fold can only predict its class
        only = 1.0 if counts[1] else -1.0
        return float(np.mean(test.labels == only))
    return accuracy(fit(method, train, params, **fit_kw), test)


def cross_validate(ds: Dataset, method, grid: TuningGrid, folds: int = 10, seed: int = 0,
                   **fit_kw) -> CVResult:
    """Exhaustive k-fold grid search; ties go to the first combination in grid order."""
    combos = grid.combinations()
    fid = fold_assignment(ds.labels, folds, seed)
    splits = [(ds.subset(np.flatnonzero(fid != f)), ds.subset(np.flatnonzero(fid == f))) for f in range(folds)]
    scores = []
    for params in combos:
        acc = [_fold_accuracy(method, tr, te, params, **fit_kw) for tr, te in splits]
        scores.append((params, float(np.mean(acc))))
    best = max(range(len(scores)), key=lambda i: (scores[i][1], -i))
    return CVResult(dict(scores[best][0]), tuple(scores))


# --------------------------------------------------------------------------
# repeated synthetic experiment

@dataclass(frozen=True)
class ExperimentConfig:
    reps: int = 100
    n: int = 100
    ratio: float = 0.0
    family: ContaminationFamily = ContaminationFamily.NORMAL
    methods: tuple = (Variant.CSVM, Variant.SPSVM, Variant.EELSVM)
    grids: Optional[dict] = None
    seed: int = 0
    folds: int = 10
    C: float = 100.0
    noise: NoiseFamily = NoiseFamily.GAUSSIAN
    dof: float = 5.0
    snr_db: Optional[float] = None
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "family", ContaminationFamily(self.family))
        object.__setattr__(self, "noise", NoiseFamily(self.noise))
        object.__setattr__(self, "methods", tuple(Variant(m) for m in self.methods))
        if self.reps < 1 or self.n < 2 or not self.methods:
            raise ValueError("need reps >= 1, n >= 2 and at least one method")
        grids = default_synthetic_grids(self.ratio, self.C)
        if self.grids:
            grids.update({Variant(k): (v if isinstance(v, TuningGrid) else TuningGrid(v))
                          for k, v in self.grids.items()})
        object.__setattr__(self, "grids", grids)


@dataclass
class MethodSummary:
    method: Variant
    estimates: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    fit_seconds: list = field(default_factory=list)
    chosen: list = field(default_factory=list)

    @property
    def distance(self) -> float:
        return bayes_distance(self.estimates) if len(self.estimates) >= 2 else float("nan")


@dataclass
class BenchmarkReport:
    config: ExperimentConfig
    summaries: dict

    COLUMNS = ("method", "N", "r", "family", "reps", "successes", "failures",
               "distance", "m_mean", "m_sd", "q_mean", "q_sd")

    def rows(self) -> list:
        cfg = self.config
        out = []
        for meth in cfg.methods:
            s = self.summaries[meth]
            E = np.array([(e.m, e.q) for e in s.estimates]).reshape(-1, 2)
            stat = lambda v, f: f(v) if v.size >= 2 else float("nan")  # noqa: E731
            out.append({
                "method": meth.value, "N": cfg.n, "r": cfg.ratio, "family": cfg.family.value,
                "reps": cfg.reps, "successes": len(s.estimates), "failures": len(s.failures),
                "distance": s.distance,
                "m_mean": stat(E[:, 0], np.mean), "m_sd": stat(E[:, 0], lambda v: np.std(v, ddof=1)),
                "q_mean": stat(E[:, 1], np.mean), "q_sd": stat(E[:, 1], lambda v: np.std(v, ddof=1)),
            })
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for row in self.rows():
            w.writerow([_fmt(row[c]) for c in self.COLUMNS])
        return buf.getvalue()

    def timing_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("method", "mean_fit_seconds"))
        for meth in self.config.methods:
            t = self.summaries[meth].fit_seconds
            w.writerow((meth.value, _fmt(float(np.mean(t)) if t else float("nan"))))
        return buf.getvalue()

    def write(self, path) -> None:
        """Deterministic report at ``path``; wall-clock timings go to ``<stem>.timing.csv``."""
        path = Path(path)
        path.write_text(self.to_csv(), newline="")
        path.with_name(path.stem + ".timing.csv").write_text(self.timing_csv(), newline="")


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(float(v)) if math.isfinite(v) else "nan"
    return str(v)


def _one_rep(cfg: ExperimentConfig, rep: int) -> dict:
    seed = cfg.seed + rep
    ds = gen_synthetic(SyntheticSpec(cfg.n, seed))
    ds = contaminate_synthetic(ds, ContaminationSpec(cfg.ratio, cfg.family, seed=seed))
    if cfg.snr_db is not None:
        ds = awgn(ds, cfg.snr_db, seed)
    out = {}
    for meth in cfg.methods:
        grid = cfg.grids[meth]
        kw = dict(noise_family=cfg.noise, dof=cfg.dof)
        try:
            if len(grid) == 1:
                params = grid.combinations()[0]
            else:
                params = cross_validate(ds, meth, grid, cfg.folds, seed, **kw).best
            t0 = time.perf_counter()
            model = fit(meth, ds, params, **kw)
            dt = time.perf_counter() - t0
            out[meth] = ("ok", extract_linear_boundary(model), dt, params)
        except RobSVMError as exc:
            out[meth] = ("fail", f"rep {rep}: {type(exc).__name__}: {exc}", None, None)
    return out


def run_synthetic_benchmark(cfg: ExperimentConfig) -> BenchmarkReport:
    """Generate, contaminate, tune, fit and score ``cfg.reps`` repetitions.

    Failed repetitions (solver failure, vertical boundary) are counted per
    method and excluded from the distance. ``cfg.threads > 1`` runs
    repetitions concurrently; results do not depend on scheduling.
    """
    reps = range(cfg.reps)
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(lambda r: _one_rep(cfg, r), reps))
    else:
        results = [_one_rep(cfg, r) for r in reps]
    summaries = {m: MethodSummary(m) for m in cfg.methods}
    for res in results:
        for meth, (status, payload, dt, params) in res.items():
            s = summaries[meth]
            if status == "ok":
                s.estimates.append(payload)
                s.fit_seconds.append(dt)
                s.chosen.append(params)
            else:
                s.failures.append(payload)
    return BenchmarkReport(cfg, summaries)


# --------------------------------------------------------------------------
# config files

def parse_config(text: str) -> ExperimentConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment.

    Keys: reps, n, ratio, family (normal|t5|t1), methods (comma list of
    csvm, spsvm, eelsvm), seed, folds, C, noise (gaussian|t), dof, snr_db,
    threads, and ``grid.<method>.<param>`` with a comma-separated value
    list overriding that method's grid (params: C, alpha, gamma).
    """
    scalars = {"reps": int, "n": int, "ratio": float, "family": str, "seed": int, "folds": int,
               "C": float, "noise": str, "dof": float, "snr_db": float, "threads": int}
    kw, grids = {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"config line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            if key in scalars:
                kw[key] = scalars[key](value)
            elif key == "methods":
                kw["methods"] = tuple(Variant(v.strip()) for v in value.split(",") if v.strip())
            elif key.startswith("grid."):
                parts = key.split(".")
                if len(parts) != 3 or parts[2] not in ("C", "alpha", "gamma"):
                    raise ValueError(f"bad grid key {key}")
                grids.setdefault(Variant(parts[1]), {})[parts[2]] = tuple(float(v) for v in value.split(","))
            else:
                raise ValueError(f"unknown key {key!r}")
        except ValueError as exc:
            raise DataError(f"config line {lineno}: {exc}") from None
    ratio = kw.get("ratio", 0.0)
    C = kw.get("C", 100.0)
    merged = {}
    defaults = default_synthetic_grids(ratio, C)
    for meth, override in grids.items():
        vals = dict(defaults[meth].values)
        vals.update(override)
        merged[meth] = TuningGrid(vals)
    try:
        return ExperimentConfig(grids=merged or None, **kw)
    except ValueError as exc:
        raise DataError(f"invalid config: {exc}") from None


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)
