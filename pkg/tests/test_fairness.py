import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from robsvm.errors import DataError, UndefinedDisparity
from robsvm.fairness import (StratifiedOutcome, cdd, demographic_disparity, denial_rates, fairness_report,
                             ks_distance, read_stratified_csv)

from oracles import cdd_by_counting, ks_by_enumeration


def so(pairs, levels=None):
    return StratifiedOutcome(tuple(p[0] for p in pairs), np.array([p[1] for p in pairs], float), levels)


# ---------------------------------------------------------------- KS

def test_ks_identical():
    assert ks_distance([1.0, 3.0, 2.0], [2.0, 1.0, 3.0]) == 0.0


def test_ks_disjoint_singletons():
    assert ks_distance([0.0], [1.0]) == 1.0


def test_ks_interleaved():
    assert ks_distance([1, 2], [1.5, 2.5]) == 0.5


def test_ks_empty():
    with pytest.raises(ValueError):
        ks_distance([], [1.0])


@pytest.mark.parametrize("seed", range(100))
def test_ks_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    a = rng.integers(0, 8, size=rng.integers(1, 12)).astype(float)
    b = rng.integers(0, 8, size=rng.integers(1, 12)).astype(float)
    assert abs(ks_distance(a, b) - ks_by_enumeration(a, b)) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(a=st.lists(st.integers(-50, 50), min_size=1, max_size=20),
       b=st.lists(st.integers(-50, 50), min_size=1, max_size=20))
def test_ks_symmetric_bounded_and_transform_invariant(a, b):
    d = ks_distance(a, b)
    assert 0.0 <= d <= 1.0
    assert d == ks_distance(b, a)
    assert d == ks_distance(np.exp(np.array(a) / 8), np.exp(np.array(b) / 8))


# ---------------------------------------------------------------- rates

def test_all_approved():
    r = denial_rates(so([("A", 1), ("B", 1), ("B", 1)]))
    assert r.overall == 0.0 and r.by_stratum == {"A": 0.0, "B": 0.0}


def test_rates_by_counting():
    r = denial_rates(so([("A", -1), ("A", -1), ("B", 1), ("B", 1)]))
    assert r.by_stratum == {"A": 1.0, "B": 0.0}
    assert r.overall == 0.5


def test_single_stratum_equals_overall():
    r = denial_rates(so([("A", -1), ("A", 1), ("A", 1)]))
    assert r.by_stratum["A"] == r.overall


def test_empty_stratum_is_absent():
    r = denial_rates(so([("A", -1), ("A", 1)], levels=("A", "Joint")))
    assert "Joint" not in r.by_stratum
    assert r.absent == ("Joint",)


# ---------------------------------------------------------------- disparity

def test_independent_table_zero():
    s = so([("A", -1), ("A", 1), ("B", -1), ("B", 1)])
    assert demographic_disparity(s, "A") == 0.0
    assert cdd(s) == 0.0


def test_full_separation():
    s = so([("A", -1), ("A", -1), ("B", 1), ("B", 1)])
    assert demographic_disparity(s, "A") == 1.0
    assert demographic_disparity(s, "B") == -1.0


def test_four_row_cdd_is_zero():
    s = so([("A", -1), ("A", 1), ("B", 1), ("B", 1)])
    assert demographic_disparity(s, "A") == pytest.approx(2 / 3, abs=1e-15)
    assert demographic_disparity(s, "B") == pytest.approx(-2 / 3, abs=1e-15)
    assert cdd(s) == 0.0


def test_one_class_undefined():
    s = so([("A", 1), ("B", 1)])
    with pytest.raises(UndefinedDisparity):
        demographic_disparity(s, "A")
    with pytest.raises(UndefinedDisparity):
        cdd(s)


def test_empty_stratum_weight_zero():
    s = so([("A", -1), ("A", 1), ("B", 1), ("B", 1)], levels=("A", "B", "Joint"))
    assert demographic_disparity(s, "Joint") == 0.0
    assert cdd(s) == 0.0


def random_table(rng):
    M = int(rng.integers(2, 30))
    strata = tuple(rng.choice(["Female", "Male", "Joint"], size=M))
    y = np.where(rng.random(M) < 0.4, -1.0, 1.0)
    y[0], y[1] = -1.0, 1.0
    return StratifiedOutcome(strata, y)


@pytest.mark.parametrize("seed", range(100))
def test_against_counting_oracle(seed):
    s = random_table(np.random.default_rng(seed))
    dd_ref, cdd_ref = cdd_by_counting(s.strata, s.outcomes)
    for level, v in dd_ref.items():
        assert abs(demographic_disparity(s, level) - v) <= 1e-12
    assert abs(cdd(s) - cdd_ref) <= 1e-12
    assert abs(sum(demographic_disparity(s, lv) for lv in s.levels)) <= 1e-12


def test_independence_sanity_bound():
    rng = np.random.default_rng(0)
    for M in (100, 1000, 10000):
        strata = tuple(rng.choice(["F", "M", "J"], size=M))
        y = np.where(rng.random(M) < 0.3, -1.0, 1.0)
        assert abs(cdd(StratifiedOutcome(strata, y))) < 3 / np.sqrt(M)


def test_validation():
    with pytest.raises(DataError):
        StratifiedOutcome(("A",), np.array([1.0, -1.0]))
    with pytest.raises(DataError):
        StratifiedOutcome(("A",), np.array([0.5]))
    with pytest.raises(DataError):
        StratifiedOutcome(("A", "B"), np.array([1.0, -1.0]), levels=("A",))


# ---------------------------------------------------------------- report

def test_report_shape():
    s = so([("A", -1), ("A", 1), ("B", 1), ("B", 1)])
    text = fairness_report(s, so([("A", -1), ("A", -1), ("B", 1), ("B", 1)]))
    lines = text.splitlines()
    assert lines[0] == "# robsvm-fairness-report v1"
    assert lines[1] == "quantity,stratum,predicted,true"
    assert "denial_rate,overall,0.25,0.5" in lines
    assert "DD,A,1.0" not in lines and any(l.startswith("DD,A,") for l in lines)
    assert lines[-1].startswith("CDD,overall,0.0,")


def test_report_undefined_entries_blank():
    text = fairness_report(so([("A", 1), ("B", 1)]))
    assert "CDD,overall," in text.splitlines()


def test_read_csv(tmp_path):
    p = tmp_path / "p.csv"
    p.write_text("sex,prediction\nF,1\nM,0\nF,-1\n")
    s = read_stratified_csv(p, "sex", "prediction")
    np.testing.assert_array_equal(s.outcomes, [1, -1, -1])
    assert s.levels == ("F", "M")
    with pytest.raises(DataError):
        read_stratified_csv(p, "race", "prediction")
