"""Robust support vector machines trained through their dual quadratic programs.

Three classifiers are provided: the soft-margin C-SVM, the single-perturbation
SVM (SP-SVM), which guards one noisy feature with a chance constraint, and the
extreme-empirical-loss SVM (EEL-SVM), which penalises the CVaR of margin
violations. Benchmarks and fairness metrics round out the package.
"""

from .data import Dataset, RescaleParams, SplitSpec, load_csv, load_libsvm, rescale_to_unit_range, split
from .errors import (DataError, EmptyDataset, MalformedCell, NonMonotoneIndex, RobSVMError, SolverError,
                     UndefinedDisparity, VerticalBoundary)
from .fairness import (StratifiedOutcome, cdd, demographic_disparity, denial_rates, fairness_report,
                       ks_distance)
from .kernels import KernelKind, KernelSpec, gram, kernel_eval, perturbed_points
from .losses import LossKind, LossSpec, eel, fisher_argmin, loss_eval
from .noise import NoiseFamily, NoiseSpec, PerturbationVector, compute_perturbation, quantile, select_noisy_feature
from .qp import QPSolution, QPStatus, QuadraticProgram, solve, solve_box_single_equality
from .svm import TrainedModel, Variant, predict, train_csvm, train_eelsvm, train_spsvm

__version__ = "0.1.0"

__all__ = [
    "Dataset", "RescaleParams", "SplitSpec", "load_csv", "load_libsvm", "rescale_to_unit_range", "split",
    "DataError", "EmptyDataset", "MalformedCell", "NonMonotoneIndex", "RobSVMError", "SolverError",
    "UndefinedDisparity", "VerticalBoundary",
    "StratifiedOutcome", "cdd", "demographic_disparity", "denial_rates", "fairness_report", "ks_distance",
    "KernelKind", "KernelSpec", "gram", "kernel_eval", "perturbed_points",
    "LossKind", "LossSpec", "eel", "fisher_argmin", "loss_eval",
    "NoiseFamily", "NoiseSpec", "PerturbationVector", "compute_perturbation", "quantile", "select_noisy_feature",
    "QPSolution", "QPStatus", "QuadraticProgram", "solve", "solve_box_single_equality",
    "TrainedModel", "Variant", "predict", "train_csvm", "train_eelsvm", "train_spsvm",
]
