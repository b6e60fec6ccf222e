"""The ten acceptance criteria, each ending in one PASS/FAIL line.

Run alone with ``pytest -s tests/test_acceptance.py``; the verdicts are
also repeated in the terminal summary of any pytest run that includes
this file.
"""

import time
import warnings

import numpy as np
import pytest

from robsvm.bench import (ContaminationSpec, ExperimentConfig, SyntheticSpec, contaminate_synthetic,
                          cross_validate, default_synthetic_grids, extract_linear_boundary, fit, gen_synthetic,
                          run_synthetic_benchmark)
from robsvm.cli import main
from robsvm.data import Dataset
from robsvm.fairness import StratifiedOutcome, cdd, demographic_disparity, ks_distance
from robsvm.kernels import KernelSpec
from robsvm.losses import LossSpec, eel, fisher_argmin
from robsvm.noise import NoiseSpec
from robsvm.qp import QPStatus, QuadraticProgram, solve
from robsvm.svm import Variant, predict, train_csvm, train_eelsvm, train_spsvm

from acceptance_log import record
from oracles import active_set_enumeration, cdd_by_counting, eel_by_minimisation, ks_by_enumeration, random_qp


def test_criterion_1_qp_oracle():
    worst_obj = worst_kkt = 0.0
    statuses = []
    solver_time = 0.0
    t0 = time.perf_counter()
    for seed in range(50):
        kw = random_qp(np.random.default_rng(1000 + seed))
        f_ref, _ = active_set_enumeration(**kw)
        t = time.perf_counter()
        sol = solve(QuadraticProgram(**kw))
        solver_time += time.perf_counter() - t
        statuses.append(sol.status)
        if sol.status is QPStatus.OPTIMAL:
            worst_kkt = max(worst_kkt, sol.kkt_residual)
        worst_obj = max(worst_obj, abs(sol.objective - f_ref))
    total = time.perf_counter() - t0
    ok = (all(s is QPStatus.OPTIMAL for s in statuses) and worst_obj <= 1e-6 and worst_kkt <= 1e-6
          and total < 10.0)
    assert record(1, ok, f"50 instances, max |f - f_oracle| = {worst_obj:.2e}, max KKT = {worst_kkt:.2e}, "
                         f"{total:.2f} s total ({solver_time:.2f} s in the solver)")


def test_criterion_2_two_point():
    ds = Dataset(np.array([[-1.0], [1.0]]), np.array([-1.0, 1.0]))
    m = train_csvm(ds, 10.0, KernelSpec.linear())
    xs = np.linspace(-3, 3, 13)[:, None]
    err_f = np.max(np.abs(predict(m, xs)[1] - xs[:, 0]))
    err_a = np.max(np.abs(m.alpha - 0.5))
    ok = err_a <= 1e-6 and abs(m.bias) <= 1e-6 and err_f <= 1e-6
    assert record(2, ok, f"alpha = {m.alpha.tolist()}, b = {m.bias:.2e}, max |f(x) - x| = {err_f:.2e}")


def random_dataset(seed):
    rng = np.random.default_rng(seed)
    n, d = int(rng.integers(10, 61)), int(rng.integers(1, 6))
    y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    y[:2] = [1.0, -1.0]
    return Dataset(rng.normal(size=(n, d)) + 0.7 * y[:, None], y)


def test_criterion_3_reductions():
    worst_sp = worst_eel = 0.0
    C = 1.0
    for seed in range(10):
        ds = random_dataset(seed)
        for kernel in (KernelSpec.linear(), KernelSpec.rbf(0.5)):
            ref = predict(train_csvm(ds, C, kernel), ds.features)[1]
            with warnings.catch_warnings():
                warnings.filterwarnings("ignore", message="zero perturbation")
                sp = train_spsvm(ds, C, kernel, NoiseSpec(alpha_level=0.5))
            ee = train_eelsvm(ds, C * ds.n, kernel, 0.0)
            worst_sp = max(worst_sp, np.max(np.abs(predict(sp, ds.features)[1] - ref)))
            worst_eel = max(worst_eel, np.max(np.abs(predict(ee, ds.features)[1] - ref)))
    ok = worst_sp <= 1e-5 and worst_eel <= 1e-5
    assert record(3, ok, f"10 datasets x 2 kernels, max decision gap SP = {worst_sp:.2e}, EEL = {worst_eel:.2e}")


def test_criterion_4_eel_identity():
    exact = True
    for N in range(1, 26):
        v = np.random.default_rng(N).exponential(size=N)
        desc = np.sort(v)[::-1]
        exact &= all(eel(v, 1 - r / N) == desc[:r].mean() for r in range(1, N + 1))
    worst = 0.0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        v = np.abs(rng.standard_t(3, size=int(rng.integers(1, 40))))
        a = float(rng.uniform(0, 0.99))
        worst = max(worst, abs(eel(v, a) - eel_by_minimisation(v, a)))
    ok = bool(exact) and worst <= 1e-8
    assert record(4, ok, f"integer levels exact: {bool(exact)}; 100 random pairs max gap {worst:.2e}")


def test_criterion_5_fisher():
    t0 = time.perf_counter()
    bad = []
    for spec in (LossSpec.hinge(), LossSpec.pinball(-0.1), LossSpec.pinball(-0.5), LossSpec.pinball(-1.0)):
        for p in np.round(np.arange(0.55, 0.951, 0.05), 2):
            if fisher_argmin(spec, p, 1 - p) != 1.0 or fisher_argmin(spec, 1 - p, p) != -1.0:
                bad.append((spec.kind.value, spec.a, p))
    dt = time.perf_counter() - t0
    ok = not bad and dt < 5.0
    assert record(5, ok, f"4 losses x 9 levels, {len(bad)} mismatches, {dt:.2f} s")


def test_criterion_6_invariants():
    checked, violations = 0, []
    for seed in range(20):
        ds = random_dataset(100 + seed)
        for kernel in (KernelSpec.linear(), KernelSpec.rbf(0.3)):
            models = [train_csvm(ds, 2.0, kernel),
                      train_spsvm(ds, 2.0, kernel, NoiseSpec("t", 5.0, 0.7)),
                      train_eelsvm(ds, 2.0 * ds.n, kernel, 0.25),
                      train_eelsvm(ds, 2.0 * ds.n, kernel, 1 - 1 / ds.n)]
            for m in models:
                checked += 1
                violations += [f"seed {seed} {m.variant.value}: {v}" for v in m.invariant_violations(1e-6)]
    assert record(6, not violations, f"{checked} trained models, {len(violations)} invariant violations"), violations


@pytest.mark.slow
def test_criterion_7_sp_closer_to_bayes_line():
    t0 = time.perf_counter()
    cfg = ExperimentConfig(reps=30, n=100, ratio=0.10, family="t1", methods=("csvm", "spsvm"), seed=0)
    rep = run_synthetic_benchmark(cfg)
    d_c = rep.summaries[Variant.CSVM].distance
    d_sp = rep.summaries[Variant.SPSVM].distance
    fails = sum(len(rep.summaries[m].failures) for m in cfg.methods)
    ok = d_sp < d_c
    assert record(7, ok, f"distance SP-SVM {d_sp:.4f} vs C-SVM {d_c:.4f} over 30 reps "
                         f"({fails} failed fits, {time.perf_counter() - t0:.0f} s)")


@pytest.mark.slow
def test_criterion_8_eel_overlaps_csvm():
    seed = 0
    ds = gen_synthetic(SyntheticSpec(200, seed))
    ds = contaminate_synthetic(ds, ContaminationSpec(0.05, "t1", seed=seed))
    grid = default_synthetic_grids(0.05)[Variant.EELSVM]
    best = cross_validate(ds, Variant.EELSVM, grid, folds=10, seed=seed).best
    e = extract_linear_boundary(fit(Variant.EELSVM, ds, best))
    c = extract_linear_boundary(fit(Variant.CSVM, ds, {"C": 100.0}))
    gap = max(abs(e.m - c.m), abs(e.q - c.q))
    # informational: how far any grid point would have moved the boundary
    spread = max(max(abs(b.m - c.m), abs(b.q - c.q)) for b in
                 (extract_linear_boundary(fit(Variant.EELSVM, ds, p)) for p in grid.combinations()))
    assert record(8, gap <= 0.05, f"tuned alpha = {best['alpha']}, boundary gap {gap:.2e} "
                                  f"(largest over the whole grid {spread:.3f})")


def test_criterion_9_fairness_oracles():
    worst = 0.0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        M = int(rng.integers(2, 30))
        strata = tuple(rng.choice(["Female", "Male", "Joint"], size=M))
        y = np.where(rng.random(M) < 0.4, -1.0, 1.0)
        y[0], y[1] = -1.0, 1.0
        s = StratifiedOutcome(strata, y)
        dd_ref, cdd_ref = cdd_by_counting(strata, y)
        worst = max(worst, abs(cdd(s) - cdd_ref),
                    *(abs(demographic_disparity(s, lv) - v) for lv, v in dd_ref.items()))
        a = rng.integers(0, 6, size=rng.integers(1, 10)).astype(float)
        b = rng.integers(0, 6, size=rng.integers(1, 10)).astype(float)
        worst = max(worst, abs(ks_distance(a, b) - ks_by_enumeration(a, b)))
    four = cdd(StratifiedOutcome(("A", "A", "B", "B"), np.array([-1.0, 1.0, 1.0, 1.0])))
    ok = worst <= 1e-12 and four == 0.0
    assert record(9, ok, f"100 tables max gap {worst:.2e}; 4-row CDD = {four!r}")


def test_criterion_10_determinism(tmp_path):
    cfg = tmp_path / "bench.cfg"
    cfg.write_text("reps = 3\nn = 50\nratio = 0.1\nfamily = t1\nmethods = csvm, spsvm, eelsvm\nfolds = 5\n")
    outs = []
    for name in ("first.csv", "second.csv"):
        path = tmp_path / name
        code = main(["synth-bench", "--config", str(cfg), "--out", str(path)])
        outs.append((code, path.read_bytes()))
    ok = outs[0][0] == outs[1][0] == 0 and outs[0][1] == outs[1][1]
    assert record(10, ok, f"two synth-bench runs, {len(outs[0][1])} bytes each, identical: {outs[0][1] == outs[1][1]}")
