"""Native method recursions, their parameter maps, and twin-run equivalence."""

import numpy as np
import pytest

from gsgdm.problems import quadratic
from gsgdm.schedules import ConstantSchedule, nag_classic
from gsgdm.variants import (
    METHODS, init_variant, map_to_gsgdm, schedule_matches_method,
    twin_run, variant_step,
)


def test_init_conventions():
    x1 = np.array([1.0, -2.0])
    hb = init_variant("hb", x1)
    assert np.array_equal(hb.x_prev, x1) and hb.k == 1
    assert np.array_equal(init_variant("nag", x1).y, x1)
    assert np.array_equal(init_variant("mass", x1).y, x1)
    assert np.array_equal(init_variant("sum", x1).z, x1)
    assert np.array_equal(init_variant("qhm", x1).m, np.zeros(2))
    with pytest.raises(AssertionError):
        init_variant("adam", x1)


def test_hand_first_steps():
    # quadratic with lambda = 1: grad at x = x; x_1 = 1
    x1 = np.array([1.0])
    g = np.array([1.0])

    st = variant_step(init_variant("hb", x1), {"beta": 0.5, "eta": 0.4}, g)
    assert abs(st.x[0] - 0.8) < 1e-15          # 1 - 0.5*0.4

    st = variant_step(init_variant("nag", x1), {"beta": 0.5, "gamma": 0.2}, g)
    assert abs(st.x[0] - 0.7) < 1e-15          # y2=0.8, x2=0.8+0.5*(0.8-1)
    assert abs(st.y[0] - 0.8) < 1e-15

    st = variant_step(init_variant("sum", x1),
                      {"beta": 0.5, "alpha": 0.2, "s": 0.5}, g)
    assert abs(st.x[0] - 0.75) < 1e-15         # y2=0.8, z2=0.9
    assert abs(st.z[0] - 0.9) < 1e-15

    st = variant_step(init_variant("qhm", x1),
                      {"beta": 0.5, "alpha": 0.2, "nu": 0.5}, g)
    assert abs(st.x[0] - 0.85) < 1e-15         # m1=0.5, blend 0.75
    assert abs(st.m[0] - 0.5) < 1e-15

    st = variant_step(init_variant("mass", x1),
                      {"beta": 0.5, "alpha": 0.2, "lam": 0.05}, g)
    assert abs(st.x[0] - 0.75) < 1e-15         # 1.5*0.8 - 0.5*1 + 0.05


def test_map_worked_examples():
    s = map_to_gsgdm("qhm", beta=0.9, alpha=0.1, nu=1.0)
    assert (s.beta, s.gamma, s.eta) == (0.9, 0.0, 0.1)

    s = map_to_gsgdm("sum", beta=0.5, alpha=0.1, s=0.0)
    assert (s.beta, s.gamma, s.eta) == (0.5, 0.0, 0.2)

    s = map_to_gsgdm("mass", beta=0.9, alpha=0.1, lam=0.09)
    assert s.gamma == 0.1 and abs(s.eta) < 1e-15

    s = map_to_gsgdm("hb", beta=0.9, eta=0.1)
    assert (s.beta, s.gamma, s.eta) == (0.9, 0.0, 0.1)

    s = map_to_gsgdm("nag", beta=0.5, gamma=0.1)
    assert (s.beta, s.gamma) == (0.5, 0.1) and abs(s.eta - 0.1) < 1e-15


def test_nag_beta_zero_rejected():
    with pytest.raises(ValueError):
        map_to_gsgdm("nag", beta=0.0, gamma=0.1)


def test_nag_classic_map():
    with pytest.raises(AssertionError):
        map_to_gsgdm("nag-classic", gamma=0.1)
    s = map_to_gsgdm("nag-classic", horizon=50, gamma=0.1)
    assert getattr(s, "kind", None) == "nag-classic"
    assert s.beta[1] == 0.0 and s.eta[1] == 0.0


def test_sum_interpolates_hb_and_nag():
    beta, alpha = 0.5, 0.1
    lo = map_to_gsgdm("sum", beta=beta, alpha=alpha, s=0.0)
    hb = map_to_gsgdm("hb", beta=beta, eta=alpha / (1.0 - beta))
    assert (lo.beta, lo.gamma, lo.eta) == (hb.beta, hb.gamma, hb.eta)

    hi = map_to_gsgdm("sum", beta=beta, alpha=alpha, s=1.0)
    nag = map_to_gsgdm("nag", beta=beta, gamma=alpha)
    assert hi.beta == nag.beta and hi.gamma == nag.gamma
    assert abs(hi.eta - nag.eta) < 1e-15


def test_sum_s_out_of_range_rejected():
    with pytest.raises(AssertionError):
        map_to_gsgdm("sum", beta=0.5, alpha=0.1, s=2.1)   # cap is 1/(1-beta)=2


def test_schedule_matches_method_accepts_mapped_schedules():
    cases = [
        ("hb", {"beta": 0.9, "eta": 0.1}),
        ("nag", {"beta": 0.5, "gamma": 0.1}),
        ("sum", {"beta": 0.5, "alpha": 0.1, "s": 1.5}),
        ("qhm", {"beta": 0.9, "alpha": 0.1, "nu": 0.7}),
        ("mass", {"beta": 0.8, "alpha": 0.1, "lam": 0.02}),
    ]
    for method, params in cases:
        schedule_matches_method(method, map_to_gsgdm(method, **params))
    schedule_matches_method("sgd", ConstantSchedule(0.0, 0.1, 0.0))
    schedule_matches_method("gsgdm", ConstantSchedule(0.3, 0.1, 0.7))
    schedule_matches_method("nag-classic", nag_classic(0.1, 20))


def test_schedule_matches_method_rejections():
    bad = [
        ("sgd", ConstantSchedule(0.5, 0.1, 0.0)),
        ("hb", ConstantSchedule(0.9, 0.01, 0.1)),
        ("nag", ConstantSchedule(0.0, 0.1, 0.0)),
        ("nag", ConstantSchedule(0.5, 0.1, 0.2)),        # eta != b g/(1-b)
        ("sum", ConstantSchedule(0.5, 0.1, -0.01)),
        ("qhm", ConstantSchedule(0.5, 0.0, 0.0)),        # gamma + eta = 0
        ("mass", ConstantSchedule(0.5, 0.1, 0.2)),       # implied lam < 0
        ("mass", ConstantSchedule(0.5, 0.0, 0.1)),       # needs gamma > 0
        ("nag-classic", ConstantSchedule(0.5, 0.1, 0.1)),
        ("hb", nag_classic(0.1, 20)),                    # not constant
    ]
    for method, schedule in bad:
        with pytest.raises(ValueError):
            schedule_matches_method(method, schedule)


STABLE = {
    "hb": {"beta": 0.9, "eta": 0.2},
    "nag": {"beta": 0.9, "gamma": 0.025},
    "sum": {"beta": 0.5, "alpha": 0.125, "s": 2.0},
    "qhm": {"beta": 0.9, "alpha": 0.25, "nu": 0.7},
    "mass": {"beta": 0.8, "alpha": 0.05, "lam": 0.02},
}


@pytest.mark.parametrize("method", METHODS)
def test_twin_equivalence(method):
    # lambdas in [1, 4]; combined step sizes chosen within 1/L = 0.25
    prob = quadratic(np.linspace(1.0, 4.0, 10))
    x1 = np.linspace(-1.0, 1.0, 10)
    dev, norm = twin_run(method, STABLE[method], prob, x1,
                         horizon=300, sigma=0.1, seed=123)
    assert dev <= 1e-10 * (1.0 + norm)


def test_twin_equivalence_nag_classic():
    prob = quadratic(np.linspace(1.0, 4.0, 10))
    x1 = np.linspace(-1.0, 1.0, 10)
    dev, norm = twin_run("nag-classic", {"gamma": 0.25}, prob, x1,
                         horizon=300, sigma=0.1, seed=9)
    assert dev <= 1e-10 * (1.0 + norm)


def test_twin_deviation_detects_wrong_map():
    # sanity: a deliberately wrong eta must register as a large deviation
    prob = quadratic(np.linspace(1.0, 4.0, 4))
    x1 = np.full(4, 0.5)
    dev, norm = twin_run("hb", {"beta": 0.9, "eta": 0.2}, prob, x1,
                         horizon=50, sigma=0.0)
    assert dev <= 1e-12
    sched = map_to_gsgdm("hb", beta=0.9, eta=0.25)
    from gsgdm.core import RunState
    from gsgdm.engine import gsgdm_step
    native = init_variant("hb", x1)
    gen = RunState(k=1, x=x1.copy(), m=np.zeros(4))
    for k in range(1, 51):
        native = variant_step(native, {"beta": 0.9, "eta": 0.2}, prob.grad(native.x))
        gen = gsgdm_step(gen, sched.step(k), prob.grad(gen.x))
    assert np.linalg.norm(native.x - gen.x) > 1e-6
