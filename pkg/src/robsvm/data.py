"""Dataset container, CSV / LIBSVM ingestion, rescaling and splitting.

Label conventions
-----------------
Sources whose labels are already ``{-1, +1}`` are kept as is and ``{0, 1}``
sources map ``0 -> -1``.  Any other two-valued label column is mapped by
comparing the raw strings: the lexicographically larger value becomes ``+1``.
Missing or non-finite cells are rejected; nothing is imputed.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import DataError, EmptyDataset, MalformedCell, NonMonotoneIndex


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with +-1 labels.

    Arrays are copied on construction and made read-only.
    """

    features: np.ndarray
    labels: np.ndarray
    feature_names: Optional[tuple] = None

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise EmptyDataset(f"need an N x d feature matrix with N, d >= 1, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise MalformedCell("features contain NaN or Inf")
        y = np.asarray(self.labels, dtype=float).ravel()
        if y.shape[0] != X.shape[0]:
            raise DataError(f"{X.shape[0]} feature rows but {y.shape[0]} labels")
        if not np.all((y == 1.0) | (y == -1.0)):
            raise DataError("labels must be -1 or +1")
        names = self.feature_names
        if names is not None:
            names = tuple(str(s) for s in names)
            if len(names) != X.shape[1]:
                raise DataError(f"{len(names)} feature names for {X.shape[1]} columns")
        object.__setattr__(self, "features", _frozen(X))
        object.__setattr__(self, "labels", _frozen(y))
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        return Dataset(self.features[idx], self.labels[idx], self.feature_names)

    def with_features(self, X) -> "Dataset":
        return Dataset(X, self.labels, self.feature_names)

    def class_counts(self) -> dict:
        return {-1: int(np.sum(self.labels < 0)), 1: int(np.sum(self.labels > 0))}


def describe(ds: Dataset) -> dict:
    """Per-feature summary statistics plus class balance."""
    X = ds.features
    std = X.std(axis=0, ddof=1) if ds.n > 1 else np.zeros(ds.d)
    return {
        "n": ds.n,
        "d": ds.d,
        "class_counts": ds.class_counts(),
        "mean": X.mean(axis=0),
        "std": std,
        "min": X.min(axis=0),
        "max": X.max(axis=0),
    }


# --------------------------------------------------------------------------
# label mapping

def _map_labels(raw: Sequence[str]) -> np.ndarray:
    values = sorted(set(raw))
    if len(values) > 2:
        raise DataError(f"more than two distinct label values: {values[:5]}")
    try:
        numeric = {v: float(v) for v in values}
    except ValueError:
        numeric = None
    if numeric is not None:
        nums = set(numeric.values())
        if nums <= {-1.0, 1.0}:
            return np.array([numeric[v] for v in raw])
        if nums <= {0.0, 1.0}:
            return np.array([1.0 if numeric[v] == 1.0 else -1.0 for v in raw])
    top = values[-1]
    return np.array([1.0 if v == top else -1.0 for v in raw])


_MISSING = {"", "na", "nan", "null", "none", "?"}


def _parse_cell(text: str, row: int, col: str) -> float:
    t = text.strip()
    if t.lower() in _MISSING:
        raise MalformedCell(f"missing value in row {row}, column {col!r}")
    try:
        v = float(t)
    except ValueError:
        raise MalformedCell(f"cannot parse {text!r} in row {row}, column {col!r}") from None
    if not math.isfinite(v):
        raise MalformedCell(f"non-finite value {text!r} in row {row}, column {col!r}")
    return v


def load_csv(path, label_column: str) -> Dataset:
    """Read a comma-separated file with a header line.

    Every column other than ``label_column`` is a numeric feature. Row order
    is preserved.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise EmptyDataset(f"{path} is empty") from None
        if label_column not in header:
            raise DataError(f"label column {label_column!r} not in header {header}")
        li = header.index(label_column)
        names = [h for j, h in enumerate(header) if j != li]
        if not names:
            raise EmptyDataset(f"{path} has no feature columns")
        rows, raw_labels = [], []
        for r, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(header):
                raise MalformedCell(f"row {r} has {len(rec)} cells, header has {len(header)}")
            lab = rec[li].strip()
            if lab.lower() in _MISSING:
                raise MalformedCell(f"missing label in row {r}")
            raw_labels.append(lab)
            rows.append([_parse_cell(c, r, header[j]) for j, c in enumerate(rec) if j != li])
    if not rows:
        raise EmptyDataset(f"{path} has a header but no data rows")
    return Dataset(np.array(rows), _map_labels(raw_labels), tuple(names))


def write_csv(ds: Dataset, path, label_column: str = "label") -> None:
    names = ds.feature_names or tuple(f"x{j + 1}" for j in range(ds.d))
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(names) + [label_column])
        for row, lab in zip(ds.features, ds.labels):
            w.writerow([repr(float(v)) for v in row] + [int(lab)])


def load_libsvm(path, dimension: Optional[int] = None) -> Dataset:
    """Read the sparse ``<label> <idx>:<val> ...`` format into a dense Dataset.

    Indices are 1-based and must strictly increase within a line. Labels must
    be +-1, or 0/1 (0 maps to -1).
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    if dimension is not None and dimension < 1:
        raise DataError("dimension must be positive")
    labels, entries = [], []
    max_idx = 0
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                lab = float(parts[0])
            except ValueError:
                raise MalformedCell(f"line {lineno}: bad label {parts[0]!r}") from None
            row, last = [], 0
            for tok in parts[1:]:
                try:
                    i_s, v_s = tok.split(":", 1)
                    idx = int(i_s)
                except ValueError:
                    raise MalformedCell(f"line {lineno}: bad entry {tok!r}") from None
                val = _parse_cell(v_s, lineno, i_s)
                if idx < 1:
                    raise DataError(f"line {lineno}: index {idx} < 1")
                if idx <= last:
                    raise NonMonotoneIndex(f"line {lineno}: index {idx} after {last}")
                if dimension is not None and idx > dimension:
                    raise DataError(f"line {lineno}: index {idx} exceeds dimension {dimension}")
                last = idx
                row.append((idx - 1, val))
            max_idx = max(max_idx, last)
            labels.append(lab)
            entries.append(row)
    if not labels:
        raise EmptyDataset(f"{path} has no examples")
    labset = set(labels)
    if labset <= {-1.0, 1.0}:
        y = np.array(labels)
    elif labset <= {0.0, 1.0}:
        y = np.where(np.array(labels) == 1.0, 1.0, -1.0)
    else:
        raise DataError(f"labels {sorted(labset)} are neither +-1 nor 0/1")
    d = dimension if dimension is not None else max(max_idx, 1)
    X = np.zeros((len(labels), d))
    for i, row in enumerate(entries):
        for j, v in row:
            X[i, j] = v
    return Dataset(X, y)


def write_libsvm(ds: Dataset, path) -> None:
    """Write ``ds`` sparsely; values use ``repr`` so a reload is exact."""
    with Path(path).open("w") as fh:
        for row, lab in zip(ds.features, ds.labels):
            toks = ["+1" if lab > 0 else "-1"]
            toks += [f"{j + 1}:{float(v)!r}" for j, v in enumerate(row) if v != 0.0]
            fh.write(" ".join(toks) + "\n")


# --------------------------------------------------------------------------
# rescaling

@dataclass(frozen=True)
class RescaleParams:
    """Per-feature (min, max) fitted on training data."""

    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mins", _frozen(self.mins))
        object.__setattr__(self, "maxs", _frozen(self.maxs))

    def apply(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.mins.shape[0]:
            raise DataError(f"expected {self.mins.shape[0]} features, got {X.shape[-1]}")
        span = self.maxs - self.mins
        const = span == 0
        out = 2.0 * (X - self.mins) / np.where(const, 1.0, span) - 1.0
        return np.where(const, 0.0, out)

    def to_dict(self) -> dict:
        return {"mins": [float(v) for v in self.mins], "maxs": [float(v) for v in self.maxs]}

    @classmethod
    def from_dict(cls, d) -> "RescaleParams":
        return cls(np.array(d["mins"], dtype=float), np.array(d["maxs"], dtype=float))


def fit_rescale(ds: Dataset) -> RescaleParams:
    return RescaleParams(ds.features.min(axis=0), ds.features.max(axis=0))


def rescale_to_unit_range(ds: Dataset) -> tuple[Dataset, RescaleParams]:
    """Map each feature affinely onto [-1, 1]; constant features become 0."""
    params = fit_rescale(ds)
    return ds.with_features(params.apply(ds.features)), params


# --------------------------------------------------------------------------
# splitting

@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise DataError("train_fraction must lie in (0, 1)")
        if self.seed < 0:
            raise DataError("seed must be non-negative")


def split(ds: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Seeded shuffle into ceil(f*N) training rows and the remainder."""
    if ds.n < 2:
        raise DataError("need at least two rows to split")
    perm = np.random.default_rng(spec.seed).permutation(ds.n)
    n_train = math.ceil(spec.train_fraction * ds.n - 1e-12)
    if n_train >= ds.n:
        raise DataError(f"train_fraction {spec.train_fraction} leaves no test rows for N={ds.n}")
    return ds.subset(perm[:n_train]), ds.subset(perm[n_train:])
