import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from robsvm.losses import LossKind, LossSpec, eel, fisher_argmin, fisher_objective, loss_eval

from oracles import eel_by_minimisation

finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_hinge():
    assert loss_eval(LossSpec.hinge(), -1.0) == 0.0
    assert loss_eval(LossSpec.hinge(), 2.0) == 2.0


def test_truncated_hinge():
    assert loss_eval(LossSpec.truncated_hinge(1.0), 3.0) == 1.0


def test_pinball():
    assert loss_eval(LossSpec.pinball(-0.5), -2.0) == 1.0


def test_truncated_pinball():
    assert loss_eval(LossSpec.truncated_pinball(-0.5, 1.0), -4.0) == 1.0


def test_pinball_eps_zone():
    spec = LossSpec.pinball_eps(0.5, -0.2, -0.1)
    assert loss_eval(spec, 0.3) == 0.0  # inside the zone
    assert loss_eval(spec, 2.0) == pytest.approx(1.5)
    assert loss_eval(spec, -3.0) == pytest.approx(0.5)


def test_least_square():
    assert loss_eval(LossSpec.least_square(), -3.0) == 9.0


def test_vectorised():
    out = loss_eval(LossSpec.hinge(), np.array([-1.0, 0.5, 2.0]))
    np.testing.assert_array_equal(out, [0.0, 0.5, 2.0])


@pytest.mark.parametrize("kw", [dict(kind="truncated_hinge", a=0.5), dict(kind="pinball", a=0.1),
                                dict(kind="truncated_pinball", a=-0.1, b=-1.0),
                                dict(kind="pinball_eps", eps=-1.0)])
def test_parameter_ranges(kw):
    with pytest.raises(ValueError):
        LossSpec(**kw)


@settings(max_examples=50, deadline=None)
@given(u=finite, kind=st.sampled_from(list(LossKind)))
def test_losses_nonnegative(u, kind):
    spec = {LossKind.TRUNCATED_HINGE: LossSpec.truncated_hinge(2.0), LossKind.PINBALL: LossSpec.pinball(-0.3),
            LossKind.PINBALL_EPS_ZONE: LossSpec.pinball_eps(0.2, -0.3, -0.1),
            LossKind.TRUNCATED_PINBALL: LossSpec.truncated_pinball(-0.3, 1.0)}.get(kind)
    spec = spec or LossSpec(kind)
    assert loss_eval(spec, u) >= 0.0


# ---------------------------------------------------------------- eel

def test_eel_alpha_zero_is_mean():
    v = np.array([3.0, 1.0, 2.0, 10.0])
    assert eel(v, 0.0) == pytest.approx(v.mean(), abs=1e-12)


def test_eel_top_one():
    assert eel([3.0, 1.0, 2.0], 1 - 1 / 3) == 3.0


def test_eel_top_two():
    assert eel([3.0, 1.0, 2.0], 1 - 2 / 3) == 2.5


def test_eel_errors():
    with pytest.raises(ValueError):
        eel([], 0.1)
    with pytest.raises(ValueError):
        eel([1.0], 1.0)


@pytest.mark.parametrize("N", range(1, 26))
def test_eel_integer_levels_exact(N):
    v = np.random.default_rng(N).exponential(size=N)
    desc = np.sort(v)[::-1]
    for r in range(1, N + 1):
        assert eel(v, 1 - r / N) == desc[:r].mean()


@pytest.mark.parametrize("seed", range(100))
def test_eel_matches_minimisation(seed):
    rng = np.random.default_rng(seed)
    N = int(rng.integers(1, 40))
    v = np.abs(rng.standard_t(3, size=N))
    alpha = float(rng.uniform(0, 0.99))
    assert abs(eel(v, alpha) - eel_by_minimisation(v, alpha)) <= 1e-8


@settings(max_examples=50, deadline=None)
@given(v=arrays(np.float64, st.integers(1, 30), elements=st.floats(0, 100)))
def test_eel_monotone_in_alpha(v):
    vals = [eel(v, a) for a in np.linspace(0, 0.95, 20)]
    assert all(b >= a - 1e-12 * (1 + abs(a)) for a, b in zip(vals, vals[1:]))


@settings(max_examples=50, deadline=None)
@given(v=arrays(np.float64, st.integers(1, 30), elements=st.floats(0, 100)),
       a=st.floats(0, 0.95), s=st.floats(0.01, 100))
def test_eel_homogeneous(v, a, s):
    assert abs(eel(s * v, a) - s * eel(v, a)) <= 1e-10 * max(1.0, abs(s * eel(v, a)))


# ---------------------------------------------------------------- fisher

def test_fisher_hinge():
    assert fisher_argmin(LossSpec.hinge(), 0.7, 0.3) == 1.0
    assert fisher_argmin(LossSpec.hinge(), 0.3, 0.7) == -1.0


def test_fisher_least_square_lands_off_sign():
    z = fisher_argmin(LossSpec.least_square(), 0.7, 0.3)
    assert z == pytest.approx(0.4, abs=1e-3)  # analytic minimiser p - q


def test_fisher_objective():
    assert fisher_objective(LossSpec.hinge(), 0.7, 0.3, 0.0) == pytest.approx(1.0)


def test_fisher_argument_checks():
    with pytest.raises(ValueError):
        fisher_argmin(LossSpec.hinge(), 0.6, 0.5)
    with pytest.raises(ValueError):
        fisher_argmin(LossSpec.hinge(), 0.5, 0.5)


@pytest.mark.parametrize("spec", [LossSpec.hinge(), LossSpec.pinball(-0.1), LossSpec.pinball(-0.5),
                                  LossSpec.pinball(-1.0)])
def test_fisher_consistent_losses(spec):
    for p in np.arange(0.55, 0.951, 0.05):
        assert fisher_argmin(spec, p, 1 - p) == 1.0
        assert fisher_argmin(spec, 1 - p, p) == -1.0
