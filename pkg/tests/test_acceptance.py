"""End-to-end acceptance checks, one test per numbered requirement.

Each test reproduces a stated experiment at its stated tolerance and asserts
its runtime budget, so `pytest -v tests/test_acceptance.py` prints one
pass/fail line per requirement. Seed conventions match the harness: run 0's
noise stream continues past the x_1 draw, run i uses seed XOR i.
"""

import time
from dataclasses import replace

import numpy as np
import pytest

from gsgdm.analysis import mbound_series, theta_products, verify_trace
from gsgdm.core import RngStream, RngStreams
from gsgdm.engine import EngineConfig, run, run_many, update_w
from gsgdm.problems import Noise, pl_sine, quadratic, synth_logistic, logistic
from gsgdm.schedules import (
    AcceleratedSchedule, ConstantSchedule, build_accelerated,
    validate_timevarying,
)
from gsgdm.variants import METHODS, twin_run


def test_criterion_01_twin_equivalence():
    # 5 methods x 10 in-range draws, 1000 noisy twin steps on a 10-d
    # quadratic; draws keep the combined step within 1/L so iterates stay
    # bounded and the absolute tolerance is meaningful.
    t0 = time.perf_counter()
    prob = quadratic(np.linspace(1.0, 4.0, 10))
    L = prob.L
    rng = RngStream(7)

    def draw(lo, hi):
        return lo + (hi - lo) * rng.uniform()

    worst = 0.0
    for method in METHODS:
        for j in range(10):
            beta = draw(0.1, 0.9)
            if method == "hb":
                params = {"beta": beta, "eta": draw(0.01, 1.0 / L)}
            elif method == "nag":
                params = {"beta": beta, "gamma": draw(0.005, (1.0 - beta) / L)}
            elif method == "sum":
                params = {"beta": beta, "alpha": draw(0.005, (1.0 - beta) / L),
                          "s": draw(0.0, 1.0 / (1.0 - beta))}
            elif method == "qhm":
                params = {"beta": beta, "alpha": draw(0.01, 1.0 / L),
                          "nu": draw(0.0, 1.0)}
            else:
                alpha = draw(0.005, (1.0 - beta) / L)
                params = {"beta": beta, "alpha": alpha,
                          "lam": draw(0.0, 1.0) * beta * alpha}
            x1 = rng.normal(10)
            dev, norm = twin_run(method, params, prob, x1,
                                 horizon=1000, sigma=0.1, seed=1000 + j)
            tol = 1e-10 * (1.0 + norm)
            worst = max(worst, dev / tol)
            assert dev <= tol, (method, j, dev, tol)
    dt = time.perf_counter() - t0
    print("[criterion 1] twin deviation worst %.3g of tolerance; %.2fs" % (worst, dt))
    assert dt < 5.0


def test_criterion_02_recursion_residuals():
    # w-residuals on a noisy constant-schedule run, v-residuals on a noisy
    # accelerated run, 1e4 steps each. The recorded residual is the raw norm;
    # checking it against 1e-10 alone is stricter than 1e-10*(1+||.||).
    t0 = time.perf_counter()
    prob = quadratic([1.0, 4.0])
    noise = Noise(kind="gaussian", sigma=0.5)

    const = ConstantSchedule(0.9, 0.1, 0.15)
    res_w = run(EngineConfig(problem=prob, schedule=const, noise=noise,
                             horizon=10 ** 4, seed=42,
                             track=frozenset({"residuals"})))
    assert not res_w.diverged
    rw = res_w.columns["resid_w"]
    assert rw.shape == (10 ** 4,) and np.max(rw) <= 1e-10

    accel = build_accelerated(L=prob.L, horizon=10 ** 4, gamma=1.0 / prob.L)
    res_v = run(EngineConfig(problem=prob, schedule=accel, noise=noise,
                             horizon=10 ** 4, seed=42,
                             track=frozenset({"residuals"})))
    assert not res_v.diverged
    rv = res_v.columns["resid_v"]
    assert rv.shape == (10 ** 4,) and np.max(rv) <= 1e-10
    dt = time.perf_counter() - t0
    print("[criterion 2] max resid_w %.3g, max resid_v %.3g; %.2fs"
          % (np.max(rw), np.max(rv), dt))
    assert dt < 5.0


def test_criterion_03_accelerated_exact_bound_and_slope():
    t0 = time.perf_counter()
    prob = quadratic([1.0, 4.0])
    x1 = RngStream(42).normal(2)
    T = 10 ** 4
    sched = build_accelerated(L=prob.L, horizon=T, gamma=1.0 / prob.L)
    res = run(EngineConfig(problem=prob, schedule=sched, horizon=T, x1=x1,
                           track=frozenset({"y"})))
    fy = res.columns["f_y"]
    ts = np.arange(1, T + 1, dtype=float)
    gap1 = float(prob.f(x1))
    d1 = float(x1 @ x1)
    rhs = 2.0 * (gap1 + prob.L * d1) / (ts * (ts + 1.0))
    viol = fy - rhs
    assert np.max(viol) <= 0.0                # zero violations, no headroom

    mask = (ts >= 1000) & (fy > 0)
    slope = np.polyfit(np.log(ts[mask]), np.log(fy[mask]), 1)[0]
    assert slope <= -1.9
    dt = time.perf_counter() - t0
    print("[criterion 3] max violation %.3g, log-log slope %.3f; %.2fs"
          % (np.max(viol), slope, dt))
    assert dt < 10.0


def test_criterion_04_deterministic_constant_bounds():
    t0 = time.perf_counter()
    prob = quadratic([1.0, 4.0])
    x1 = RngStream(42).normal(2)
    T = 10 ** 4
    ts = np.arange(1, T + 1, dtype=float)
    gap1 = float(prob.f(x1))
    d1 = float(x1 @ x1)
    g1sq = float(prob.grad(x1) @ prob.grad(x1))
    beta = 0.9

    eta = 1.0 / prob.L
    res = run(EngineConfig(problem=prob, schedule=ConstantSchedule(beta, 0.0, eta),
                           horizon=T, x1=x1, track=frozenset({"xbar"})))
    lhs_hb = res.extras["f_xbar"]
    rhs_hb = d1 / (2.0 * eta * ts) + beta * gap1 / ((1.0 - beta) * ts)
    assert np.max(lhs_hb - rhs_hb) <= 0.0

    gamma = 1.0 / prob.L
    eta_nag = beta * gamma / (1.0 - beta)
    res = run(EngineConfig(problem=prob,
                           schedule=ConstantSchedule(beta, gamma, eta_nag),
                           horizon=T, x1=x1, track=frozenset({"xbar"})))
    lhs_nag = res.extras["f_xbar"]
    rhs_nag = ((1.0 - beta) * d1 / (2.0 * gamma * ts)
               + beta * (gap1 + gamma * g1sq / 2.0) / ((1.0 - beta) * ts))
    assert np.max(lhs_nag - rhs_nag) <= 0.0
    dt = time.perf_counter() - t0
    print("[criterion 4] max violation hb %.3g, nag-const %.3g; %.2fs"
          % (np.max(lhs_hb - rhs_hb), np.max(lhs_nag - rhs_nag), dt))
    assert dt < 10.0


@pytest.fixture(scope="module")
def quad_sweep():
    """200-seed noisy quadratic sweep shared by requirements 5 and 6."""
    t0 = time.perf_counter()
    prob = quadratic([1.0, 4.0])
    sched = ConstantSchedule(0.9, 0.4 / prob.L, 0.4 / prob.L)
    scalar = RngStream(42)
    x1 = scalar.normal(2)
    streams = RngStreams(42, 200)
    streams.states[0] = np.uint64(scalar.state)   # run 0 continues past x1
    res = run_many(prob, sched, Noise(kind="gaussian", sigma=1.0),
                   5000, x1, streams, track=frozenset({"xbar"}))
    return {"prob": prob, "sched": sched, "x1": x1, "res": res,
            "seconds": time.perf_counter() - t0}


def test_criterion_05_stochastic_convex_bound(quad_sweep):
    t0 = time.perf_counter()
    x1, res = quad_sweep["x1"], quad_sweep["res"]
    report = verify_trace(res.merged(), "thm-cvx-const", {
        "schedule": quad_sweep["sched"], "sigma": 1.0, "f_star": 0.0,
        "dist1_sq": float(x1 @ x1), "check_at": [100, 1000, 5000]})
    print("[criterion 5] %s" % report.line())
    assert report.passed and report.n_seeds == 200 and report.checked == 3
    dt = quad_sweep["seconds"] + time.perf_counter() - t0
    print("[criterion 5] %.2fs including shared sweep" % dt)
    assert dt < 60.0


def test_criterion_06_momentum_second_moment_bound(quad_sweep):
    t0 = time.perf_counter()
    res, sched = quad_sweep["res"], quad_sweep["sched"]
    m = res.columns["m_sq"][:, :1000]
    g = res.columns["grad_sq"][:, :1000]
    mb = mbound_series(g.mean(axis=0), sched, sigma=1.0)
    se = m.std(axis=0, ddof=1) / np.sqrt(m.shape[0])
    slack = m.mean(axis=0) - mb - 2.0 * se
    assert np.max(slack) <= 0.0
    dt = quad_sweep["seconds"] + time.perf_counter() - t0
    print("[criterion 6] worst slack %.3g at k=%d; %.2fs including shared sweep"
          % (np.max(slack), int(np.argmax(slack)) + 1, dt))
    assert dt < 60.0


def test_criterion_07_nonconvex_gradient_bound():
    t0 = time.perf_counter()
    prob = pl_sine()
    sched = ConstantSchedule(0.9, 0.0, 1.0 / 240.0)    # (1-beta)/(3L)
    scalar = RngStream(42)
    x1 = scalar.normal(1)
    streams = RngStreams(42, 200)
    streams.states[0] = np.uint64(scalar.state)
    res = run_many(prob, sched, Noise(kind="gaussian", sigma=0.5),
                   10 ** 4, x1, streams)
    report = verify_trace(res.merged(), "thm-nc", {
        "schedule": sched, "sigma": 0.5, "L": prob.L, "f_star": 0.0})
    print("[criterion 7] %s" % report.line())
    assert report.passed and report.checked == 10 ** 4
    dt = time.perf_counter() - t0
    print("[criterion 7] %.2fs" % dt)
    assert dt < 60.0


def test_criterion_08_pl_deterministic_contraction():
    t0 = time.perf_counter()
    base = pl_sine()
    mu = 0.95 * base.mu                      # 5% slack on the grid estimate
    prob = replace(base, mu=mu)
    eta = 1.0 / 32.0                         # exactly at the admissible cap
    sched = ConstantSchedule(0.5, 0.0, eta)
    T = 10 ** 4
    x1 = np.array([2.0])
    res = run(EngineConfig(problem=prob, schedule=sched, horizon=T, x1=x1,
                           track=frozenset({"w", "varphi"})))
    assert not res.diverged
    rho = 1.0 - mu * eta / 18.0
    gap1 = float(prob.f(x1))

    fw = res.columns["f_w"]
    rhs = rho ** np.arange(1, T, dtype=float) * gap1
    geo_viol = np.max(fw[1:] - rhs)          # row t+1 against rho^t
    final_gap = float(prob.f(update_w(res.final, sched)))
    assert geo_viol <= 0.0
    assert final_gap <= rho ** T * gap1

    vphi = res.columns["varphi"]
    contraction = np.max(vphi[1:] - rho * vphi[:-1])
    assert contraction <= 1e-12 * max(1.0, vphi[0])
    dt = time.perf_counter() - t0
    print("[criterion 8] geometric violation %.3g, contraction violation %.3g; %.2fs"
          % (geo_viol, contraction, dt))
    assert dt < 10.0


def test_criterion_09_pl_stochastic_floor():
    t0 = time.perf_counter()
    prob = pl_sine()
    sched = ConstantSchedule(0.5, 0.0, 1.0 / 32.0)
    T = 10 ** 4
    x1 = np.array([2.0])
    streams = RngStreams(42, 200)
    res = run_many(prob, sched, Noise(kind="gaussian", sigma=0.3),
                   T, x1, streams, track=frozenset({"w"}))
    report = verify_trace(res.merged(), "thm-pl", {
        "schedule": sched, "sigma": 0.3, "L": prob.L, "mu": 0.95 * prob.mu,
        "f_star": 0.0, "final_w_gap": prob.f(res.final.w),
        "check_at": [T]})
    print("[criterion 9] %s" % report.line())
    assert report.passed and report.n_seeds == 200 and report.checked == 1
    dt = time.perf_counter() - t0
    print("[criterion 9] %.2fs" % dt)
    assert dt < 90.0


def test_criterion_10_validator_worked_examples():
    t0 = time.perf_counter()
    L = 4.0
    gamma = 1.0 / L
    s = build_accelerated(L=L, horizon=100, gamma=gamma)
    assert isinstance(s, AcceleratedSchedule)
    # closed-form spot values at gamma = 1/L
    assert s.eta[1] == 0.0 and s.beta[2] == 0.0
    assert abs(s.eta[2] - gamma / 5.0) <= 1e-16

    for k in (1, 2, 3, 10, 99):
        want = (k + 1) * L * gamma * gamma / 2.0
        assert abs(s.gamma_tilde(k) - want) <= 1e-14 * want

    Theta = theta_products(s.theta, 99)
    ks = np.arange(0, 100, dtype=float)
    assert np.allclose(Theta, 2.0 / ((ks + 1.0) * (ks + 2.0)), rtol=1e-13)

    rep = validate_timevarying(s, L)
    assert rep.passed
    assert abs(rep.residuals["lr-2"]) <= 1e-13
    dt = time.perf_counter() - t0
    print("[criterion 10] lr-2 residual %.3g; %.2fs" % (rep.residuals["lr-2"], dt))
    assert dt < 1.0


def test_criterion_11_gradient_finite_differences():
    t0 = time.perf_counter()
    rng = RngStream(99)
    A, b = synth_logistic(40, 3, rng)
    cases = [
        (quadratic(np.linspace(0.5, 4.0, 6)), 5),
        (pl_sine(), 5),
        (logistic(A, b), 3),
    ]
    h = 1e-6
    worst = 0.0
    for prob, n_pts in cases:
        for _ in range(n_pts):
            x = rng.normal(prob.dim)
            g = prob.grad(x)
            fd = np.empty(prob.dim)
            for i in range(prob.dim):
                e = np.zeros(prob.dim)
                e[i] = h
                fd[i] = (prob.f(x + e) - prob.f(x - e)) / (2.0 * h)
            rel = np.linalg.norm(g - fd) / max(1.0, np.linalg.norm(g))
            worst = max(worst, rel)
            assert rel <= 1e-5, prob.name
    dt = time.perf_counter() - t0
    print("[criterion 11] worst relative error %.3g; %.2fs" % (worst, dt))
    assert dt < 5.0
