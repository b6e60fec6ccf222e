"""Command-line front end: ``robsvm <subcommand> [flags]``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 solver failure.
Diagnostics go to stderr; data goes to ``--out`` files or stdout.
Stochastic subcommands default to ``--seed 0``.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import bench, fairness, losses
from .data import Dataset, fit_rescale, load_csv, load_libsvm, write_csv
from .errors import DataError, RobSVMError, SolverError
from .kernels import KernelSpec
from .noise import NoiseFamily, NoiseSpec, compute_perturbation, select_noisy_feature
from .qp import dump_qp
from .svm import (TrainedModel, Variant, csvm_qp, eelsvm_qp, predict, spsvm_qp, train_csvm,
                  train_eelsvm, train_spsvm)

DEFAULT_SEED = 0

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_SOLVER = 0, 1, 2, 3

_MODEL_NAMES = {"c-svm": Variant.CSVM, "csvm": Variant.CSVM, "sp-svm": Variant.SPSVM,
                "spsvm": Variant.SPSVM, "eel-svm": Variant.EELSVM, "eelsvm": Variant.EELSVM}

LABEL_HELP = ("labels: {-1,+1} kept, {0,1} map 0 -> -1, any other pair maps the "
              "lexicographically larger value to +1")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _positive(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _feature_index(text):
    if text == "auto":
        return None
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected 'auto' or a non-negative integer") from None
    if v < 0:
        raise argparse.ArgumentTypeError("feature index must be non-negative")
    return v


def _add_data(p, required=True):
    p.add_argument("--data", required=required, help="CSV (header row) or LIBSVM file")
    p.add_argument("--label", help="label column name (CSV only); " + LABEL_HELP)
    p.add_argument("--format", choices=("auto", "csv", "libsvm"), default="auto",
                   help="input format; auto uses the .csv extension to pick CSV")
    p.add_argument("--dimension", type=int, help="LIBSVM feature count (default: max index)")


def _add_kernel(p):
    p.add_argument("--kernel", choices=("linear", "rbf"), default="linear")
    p.add_argument("--gamma", type=_positive, default=1.0, help="RBF width (default 1)")


def _add_noise(p):
    p.add_argument("--noise", choices=("gaussian", "t"), default="gaussian", help="SP-SVM noise family")
    p.add_argument("--dof", type=_positive, default=5.0, help="Student-t degrees of freedom")
    p.add_argument("--feature-index", type=_feature_index, default=None, metavar="auto|INT",
                   help="SP-SVM perturbed feature (0-based); auto picks the largest std")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="robsvm", description="Robust SVM training, benchmarking and fairness auditing.",
                 epilog="exit codes: 0 ok, 1 usage, 2 data error, 3 solver failure")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train a model and write it as JSON")
    _add_data(p)
    p.add_argument("--model", required=True, choices=sorted(_MODEL_NAMES), help="variant")
    _add_kernel(p)
    p.add_argument("--C", type=_positive, default=1.0, help="penalty for c-svm / sp-svm")
    p.add_argument("--D", type=_positive, help="penalty for eel-svm (default 100 N)")
    p.add_argument("--alpha", type=float,
                   help="sp-svm noise level in [0.5,1) (default 0.5) or eel-svm level in [0,1) (default 0)")
    _add_noise(p)
    p.add_argument("--rescale", action="store_true", help="map features to [-1, 1] using the training data")
    p.add_argument("--solver", choices=("auto", "smo", "ipm"), default="auto", help="c-svm solver (default auto)")
    p.add_argument("--dump-qp", metavar="PATH", help="write the dual QP in plain text before solving")
    p.add_argument("--out", required=True, help="model file to write")

    p = sub.add_parser("predict", help="apply a model; writes prediction,decision_value CSV")
    p.add_argument("--model", required=True, help="model file from 'train'")
    _add_data(p)
    p.add_argument("--keep-columns", default="", help="comma list of input CSV columns to copy to the output")
    p.add_argument("--out", help="output CSV (default stdout)")

    p = sub.add_parser("cv", help="k-fold grid search")
    _add_data(p)
    p.add_argument("--model", required=True, choices=sorted(_MODEL_NAMES))
    _add_kernel(p)
    p.add_argument("--grid", required=True,
                   help="e.g. 'C=1,10;alpha=0.5,0.55'; a gamma entry selects an RBF kernel. "
                        "For eel-svm C is per sample: D = C N")
    _add_noise(p)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", help="score table CSV (default stdout)")

    p = sub.add_parser("synth-bench", help="repeated synthetic benchmark from a config file")
    p.add_argument("--config", required=True, help="key = value file, see robsvm.bench.parse_config")
    p.add_argument("--seed", type=int, help="override the config seed (config default 0)")
    p.add_argument("--threads", type=int, help="concurrent repetitions (default 1)")
    p.add_argument("--out", help="report CSV (default stdout); timings go to <stem>.timing.csv")

    p = sub.add_parser("contaminate", help="add outliers or white noise to a dataset")
    _add_data(p, required=False)
    p.add_argument("--generate", type=int, metavar="N", help="start from N synthetic two-class rows instead of --data")
    p.add_argument("--ratio", type=float, help="fraction of rows replaced by elliptical outliers (2 features)")
    p.add_argument("--family", choices=("normal", "t5", "t1"), default="normal")
    p.add_argument("--snr-db", type=float, help="add white Gaussian noise at this SNR per column")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", required=True, help="output CSV (label column 'label')")

    p = sub.add_parser("fairness", help="denial rates, demographic disparity and CDD")
    p.add_argument("--predictions", required=True, help="CSV with strata and predicted outcomes")
    p.add_argument("--strata-column", required=True)
    p.add_argument("--outcome-column", default="prediction")
    p.add_argument("--truth", help="optional CSV with ground-truth outcomes, same row order")
    p.add_argument("--truth-column", default="label")
    p.add_argument("--out", help="report CSV (default stdout)")

    p = sub.add_parser("fisher-check", help="grid minimiser of the conditional risk")
    p.add_argument("--loss", required=True, choices=[k.value for k in losses.LossKind])
    p.add_argument("--a", type=float, default=0.0)
    p.add_argument("--b", type=float, default=0.0)
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--q", type=float)
    p.add_argument("--step", type=_positive, default=1e-3)
    return ap


# --------------------------------------------------------------------------

def _load(args) -> Dataset:
    fmt = args.format
    if fmt == "auto":
        fmt = "csv" if str(args.data).lower().endswith(".csv") else "libsvm"
    if fmt == "csv":
        if not args.label:
            raise UsageError("--label is required for CSV input")
        return load_csv(args.data, args.label)
    return load_libsvm(args.data, args.dimension)


def _kernel(args) -> KernelSpec:
    return KernelSpec.rbf(args.gamma) if args.kernel == "rbf" else KernelSpec.linear()


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text, newline="")
    else:
        sys.stdout.write(text)


def _cmd_train(args) -> int:
    variant = _MODEL_NAMES[args.model]
    kernel = _kernel(args)
    if variant is Variant.SPSVM:
        noise = NoiseSpec(NoiseFamily(args.noise), args.dof, 0.5 if args.alpha is None else args.alpha)
    elif variant is Variant.EELSVM:
        level = 0.0 if args.alpha is None else args.alpha
        if not 0.0 <= level < 1.0:
            raise UsageError("--alpha for eel-svm must lie in [0, 1)")
    ds = _load(args)
    if args.dump_qp:
        work = ds.with_features(fit_rescale(ds).apply(ds.features)) if args.rescale else ds
        if variant is Variant.CSVM:
            qp = csvm_qp(work, args.C, kernel)
        elif variant is Variant.SPSVM:
            k = select_noisy_feature(work) if args.feature_index is None else args.feature_index
            qp = spsvm_qp(work, args.C, kernel, compute_perturbation(work, k, noise))
        else:
            qp = eelsvm_qp(work, args.D or 100.0 * ds.n, kernel, level)
        with open(args.dump_qp, "w") as fh:
            dump_qp(qp, fh)
    if variant is Variant.CSVM:
        model = train_csvm(ds, args.C, kernel, rescale=args.rescale, solver=args.solver)
    elif variant is Variant.SPSVM:
        model = train_spsvm(ds, args.C, kernel, noise, args.feature_index, rescale=args.rescale)
    else:
        model = train_eelsvm(ds, args.D or 100.0 * ds.n, kernel, level, rescale=args.rescale)
    model.save(args.out)
    print(f"trained {variant.value} on {ds.n} rows; bias {model.bias:.6g}", file=sys.stderr)
    return EXIT_OK


def _cmd_predict(args) -> int:
    model = TrainedModel.load(args.model)
    keep = [c for c in args.keep_columns.split(",") if c]
    if keep and not str(args.data).lower().endswith(".csv") and args.format != "csv":
        raise UsageError("--keep-columns needs CSV input")
    if args.label is None and (args.format == "csv" or str(args.data).lower().endswith(".csv")):
        raise UsageError("--label is required for CSV input")
    ds = _load(args)
    labels, f = predict(model, ds.features)
    extra = []
    if keep:
        with open(args.data, newline="") as fh:
            rows = list(csv.DictReader(fh))
        for c in keep:
            if c not in rows[0]:
                raise DataError(f"no column named {c!r} in {args.data}")
        extra = [[r[c] for c in keep] for r in rows]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([*keep, "label", "prediction", "decision_value"])
    for i in range(ds.n):
        w.writerow([*(extra[i] if extra else []), int(ds.labels[i]), int(labels[i]), repr(float(f[i]))])
    _emit(buf.getvalue(), args.out)
    print(f"accuracy {np.mean(labels == ds.labels):.6f} on {ds.n} rows", file=sys.stderr)
    return EXIT_OK


def _parse_grid(text: str) -> bench.TuningGrid:
    vals = {}
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise UsageError(f"bad grid entry {part!r}")
        k, v = (s.strip() for s in part.split("=", 1))
        if k not in ("C", "alpha", "gamma"):
            raise UsageError(f"unknown grid parameter {k!r}")
        try:
            vals[k] = tuple(float(x) for x in v.split(","))
        except ValueError:
            raise UsageError(f"bad grid values {v!r}") from None
    if "C" not in vals:
        vals = {"C": (1.0,), **vals}
    try:
        return bench.TuningGrid(vals)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _cmd_cv(args) -> int:
    grid = _parse_grid(args.grid)
    if args.folds < 2:
        raise UsageError("--folds must be at least 2")
    method = _MODEL_NAMES[args.model]
    ds = _load(args)
    if ds.n < args.folds:
        raise DataError(f"{ds.n} rows cannot be split into {args.folds} folds")
    res = bench.cross_validate(ds, method, grid, args.folds, args.seed, kernel=_kernel(args),
                               noise_family=NoiseFamily(args.noise), dof=args.dof,
                               feature_index=args.feature_index)
    keys = list(grid.values)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([*keys, "mean_accuracy", "best"])
    for params, acc in res.scores:
        w.writerow([*(repr(params[k]) for k in keys), repr(acc), int(params == res.best)])
    _emit(buf.getvalue(), args.out)
    print("best " + ", ".join(f"{k}={v:g}" for k, v in res.best.items()), file=sys.stderr)
    return EXIT_OK


def _cmd_synth_bench(args) -> int:
    cfg = bench.load_config(args.config)
    over = {}
    if args.seed is not None:
        over["seed"] = args.seed
    if args.threads is not None:
        if args.threads < 1:
            raise UsageError("--threads must be at least 1")
        over["threads"] = args.threads
    if over:
        cfg = replace(cfg, **over)
    report = bench.run_synthetic_benchmark(cfg)
    if args.out:
        report.write(args.out)
    else:
        sys.stdout.write(report.to_csv())
    for meth in cfg.methods:
        for msg in report.summaries[meth].failures:
            print(f"{meth.value}: {msg}", file=sys.stderr)
    return EXIT_OK


def _cmd_contaminate(args) -> int:
    if (args.data is None) == (args.generate is None):
        raise UsageError("give exactly one of --data and --generate")
    if args.ratio is None and args.snr_db is None:
        raise UsageError("give --ratio and/or --snr-db")
    if args.ratio is not None and not 0.0 <= args.ratio <= 1.0:
        raise UsageError("--ratio must lie in [0, 1]")
    if args.generate is not None:
        if args.generate < 2:
            raise UsageError("--generate needs N >= 2")
        ds = bench.gen_synthetic(bench.SyntheticSpec(args.generate, args.seed))
    else:
        ds = _load(args)
    if args.ratio is not None:
        ds = bench.contaminate_synthetic(ds, bench.ContaminationSpec(args.ratio, args.family, seed=args.seed))
    if args.snr_db is not None:
        ds = bench.awgn(ds, args.snr_db, args.seed)
    write_csv(ds, args.out, "label")
    return EXIT_OK


def _cmd_fairness(args) -> int:
    pred = fairness.read_stratified_csv(args.predictions, args.strata_column, args.outcome_column)
    truth = None
    if args.truth:
        truth = fairness.read_stratified_csv(args.truth, args.strata_column, args.truth_column)
    _emit(fairness.fairness_report(pred, truth), args.out)
    return EXIT_OK


def _cmd_fisher(args) -> int:
    q = 1.0 - args.p if args.q is None else args.q
    try:
        spec = losses.LossSpec(args.loss, a=args.a, b=args.b, eps=args.eps)
        z = losses.fisher_argmin(spec, args.p, q, (-3.0, 3.0, args.step))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    print(repr(z))
    return EXIT_OK


_COMMANDS = {"train": _cmd_train, "predict": _cmd_predict, "cv": _cmd_cv, "synth-bench": _cmd_synth_bench,
             "contaminate": _cmd_contaminate, "fairness": _cmd_fairness, "fisher-check": _cmd_fisher}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"robsvm {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"robsvm {args.command}: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (RobSVMError, OSError) as exc:
        print(f"robsvm {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"robsvm {args.command}: invalid value: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
