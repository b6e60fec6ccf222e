"""Audit metrics for a classifier's decisions across protected strata.

``Y = -1`` is a denial and ``Y = +1`` an approval. Demographic disparity of
stratum ``l`` is ``Pr(S=l | Y=-1) - Pr(S=l | Y=+1)`` and the conditional
demographic disparity (CDD) weights these by ``Pr(S=l)``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DataError, UndefinedDisparity

REPORT_VERSION = 1


@dataclass(frozen=True)
class StratifiedOutcome:
    """Stratum label and +-1 outcome per individual.

    ``levels`` lists the strata to report, in order; it defaults to the
    sorted distinct values of ``strata`` and may name strata with no rows.
    """

    strata: tuple
    outcomes: np.ndarray
    levels: Optional[tuple] = None

    def __post_init__(self):
        strata = tuple(self.strata)
        y = np.asarray(self.outcomes, dtype=float).ravel()
        if len(strata) != y.size:
            raise DataError(f"{len(strata)} strata for {y.size} outcomes")
        if y.size == 0:
            raise DataError("no observations")
        if not np.all((y == 1.0) | (y == -1.0)):
            raise DataError("outcomes must be -1 or +1")
        y = y.copy()
        y.flags.writeable = False
        levels = tuple(sorted(set(strata), key=str)) if self.levels is None else tuple(self.levels)
        missing = set(strata) - set(levels)
        if missing:
            raise DataError(f"strata not listed in levels: {sorted(missing, key=str)}")
        if not levels:
            raise DataError("need at least one stratum")
        object.__setattr__(self, "strata", strata)
        object.__setattr__(self, "outcomes", y)
        object.__setattr__(self, "levels", levels)

    @property
    def m(self) -> int:
        return self.outcomes.size

    def mask(self, level) -> np.ndarray:
        return np.fromiter((s == level for s in self.strata), dtype=bool, count=self.m)


def ks_distance(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov distance ``sup |F_a - F_b|``.

    Both empirical CDFs are right-continuous step functions, so the supremum
    is attained at one of the pooled sample points.
    """
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise ValueError("ks_distance needs two non-empty samples")
    pts = np.union1d(a, b)
    Fa = np.searchsorted(a, pts, side="right") / a.size
    Fb = np.searchsorted(b, pts, side="right") / b.size
    return float(np.max(np.abs(Fa - Fb)))


@dataclass(frozen=True)
class DenialRates:
    overall: float
    by_stratum: dict  # only populated strata
    absent: tuple  # strata with no rows, whose rate is undefined


def denial_rates(s: StratifiedOutcome) -> DenialRates:
    deny = s.outcomes < 0
    by, absent = {}, []
    for level in s.levels:
        mk = s.mask(level)
        if mk.any():
            by[level] = float(deny[mk].mean())
        else:
            absent.append(level)
    return DenialRates(float(deny.mean()), by, tuple(absent))


def _class_sizes(s: StratifiedOutcome):
    n_neg = int(np.sum(s.outcomes < 0))
    n_pos = s.m - n_neg
    if n_neg == 0 or n_pos == 0:
        raise UndefinedDisparity("demographic disparity needs both denials and approvals")
    return n_neg, n_pos


def _counts(s: StratifiedOutcome, level) -> tuple[int, int]:
    mk = s.mask(level)
    return int(np.sum(mk & (s.outcomes < 0))), int(np.sum(mk & (s.outcomes > 0)))


def demographic_disparity(s: StratifiedOutcome, level) -> float:
    if level not in s.levels:
        raise KeyError(f"unknown stratum {level!r}")
    n_neg, n_pos = _class_sizes(s)
    neg, pos = _counts(s, level)
    # one division of an exact integer numerator keeps exact cancellations exact
    return (neg * n_pos - pos * n_neg) / (n_neg * n_pos)


def cdd(s: StratifiedOutcome) -> float:
    """``sum_l Pr(S=l) DD_l``; an empty stratum has weight zero."""
    n_neg, n_pos = _class_sizes(s)
    num = 0
    for level in s.levels:
        neg, pos = _counts(s, level)
        num += (neg + pos) * (neg * n_pos - pos * n_neg)
    return num / (s.m * n_neg * n_pos)


# --------------------------------------------------------------------------
# report

def _column(s: StratifiedOutcome) -> dict:
    rates = denial_rates(s)
    col = {("denial_rate", "overall"): rates.overall}
    for level in s.levels:
        col[("denial_rate", level)] = rates.by_stratum.get(level)
    try:
        for level in s.levels:
            col[("DD", level)] = demographic_disparity(s, level)
        col[("CDD", "overall")] = cdd(s)
    except UndefinedDisparity:
        for level in s.levels:
            col[("DD", level)] = None
        col[("CDD", "overall")] = None
    return col


def fairness_report(predicted: StratifiedOutcome, truth: Optional[StratifiedOutcome] = None) -> str:
    """CSV with overall and per-stratum denial rates, DD per stratum and CDD.

    Columns are ``quantity,stratum,predicted`` plus ``true`` when ground
    truth is given. Undefined entries are left empty. The first line is a
    ``# robsvm-fairness-report v1`` marker.
    """
    cols = [_column(predicted)]
    names = ["predicted"]
    if truth is not None:
        if truth.strata != predicted.strata:
            raise DataError("ground truth and predictions must list the same strata row by row")
        cols.append(_column(StratifiedOutcome(truth.strata, truth.outcomes, predicted.levels)))
        names.append("true")
    buf = io.StringIO()
    buf.write(f"# robsvm-fairness-report v{REPORT_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["quantity", "stratum", *names])
    for key in cols[0]:
        vals = ["" if c[key] is None else repr(float(c[key])) for c in cols]
        w.writerow([key[0], key[1], *vals])
    return buf.getvalue()


def _outcome(text: str, row: int) -> float:
    t = text.strip()
    try:
        v = float(t)
    except ValueError:
        raise DataError(f"row {row}: outcome {text!r} is not numeric") from None
    if v in (1.0, -1.0):
        return v
    if v == 0.0:
        return -1.0
    raise DataError(f"row {row}: outcome {text!r} must be +-1 or 0/1")


def read_stratified_csv(path, strata_column: str, outcome_column: str) -> StratifiedOutcome:
    """Read strata and outcomes (+-1, or 0/1 with 0 a denial) from a headed CSV."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    if not rows:
        raise DataError(f"{path}: no data rows")
    for col in (strata_column, outcome_column):
        if col not in rows[0]:
            raise DataError(f"{path}: no column named {col!r}")
    strata = tuple(r[strata_column] for r in rows)
    y = np.array([_outcome(r[outcome_column], i + 2) for i, r in enumerate(rows)])
    return StratifiedOutcome(strata, y)
