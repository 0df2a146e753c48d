"""Lyapunov functions, guarantee right-hand sides, and trace verification.

Two certificate functions are maintained online:
    Phi_k    = (1/Theta_{k-1}) (f(y_k) - f*) + p_k ||v_k - x*||^2
    varphi_k = f(w_k) - f* + C sum_{j<k} beta^{k-1-j} ||grad f(x_j)||^2
with Theta_0 = 1, Theta_k = (1 - theta_k) Theta_{k-1}, p_k = theta_k /
(2 gamma~_k Theta_k), and C the constant defined in pl_constants. Bound
formulas are keyed by theorem id; verify_trace compares an empirical series
against the bound, using a two-standard-error allowance on seed means for
stochastic runs and a 1e-12 relative headroom for deterministic ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .schedules import ConstantSchedule, TimeVaryingSchedule

DETERMINISTIC_HEADROOM = 1e-12

THEOREMS = (
    "thm-cvx-const", "thm-cvx-deter", "conv-hb-deter", "conv-nes-deter",
    "rate-general", "thm-accel-det", "thm-accel-stoch", "thm-nc", "thm-pl",
)


def theta_products(theta, upto):
    """Theta_j = prod_{i<=j} (1 - theta_i) for j = 0..upto, Theta_0 = 1.

    theta is a 1-indexed array (slot 0 ignored). For theta_k = 2/(k+2) the
    product telescopes to 2/((k+1)(k+2)).
    """
    theta = np.asarray(theta, dtype=float)
    assert upto + 1 <= theta.shape[0]
    out = np.empty(upto + 1)
    out[0] = 1.0
    np.cumprod(1.0 - theta[1:upto + 1], out=out[1:])
    return out


class PhiTracker:
    """Online Phi_k evaluation; must be called at k = 1, 2, ... in order."""

    def __init__(self, schedule, x_star):
        assert isinstance(schedule, TimeVaryingSchedule)
        self.s = schedule
        self.x_star = np.asarray(x_star, dtype=float)
        self.Theta_prev = 1.0
        self.next_k = 1

    def value(self, k, f_y_gap, v):
        assert k == self.next_k, "Phi must be evaluated sequentially from k=1"
        th = float(self.s.theta[k])
        Theta_k = self.Theta_prev * (1.0 - th)
        gamma_t = self.s.gamma_tilde(k)
        assert gamma_t > 0.0, "p_k undefined: gamma~_k <= 0"
        p_k = th / (2.0 * gamma_t * Theta_k)
        diff = np.asarray(v, dtype=float) - self.x_star
        out = f_y_gap / self.Theta_prev + p_k * float(diff @ diff)
        self.Theta_prev = Theta_k
        self.next_k = k + 1
        return out


def phi(k, f_y_gap, v, x_star, schedule):
    """Phi_k from scratch (O(k)); PhiTracker amortizes this along a run."""
    assert k >= 1
    Theta = theta_products(schedule.theta, k)
    gamma_t = schedule.gamma_tilde(k)
    assert gamma_t > 0.0
    p_k = float(schedule.theta[k]) / (2.0 * gamma_t * Theta[k])
    diff = np.asarray(v, dtype=float) - np.asarray(x_star, dtype=float)
    return f_y_gap / Theta[k - 1] + p_k * float(diff @ diff)


def pl_constants(beta, gamma, eta, L, mu):
    """(M, C) for the gradient-dominated analysis.

    M = (gamma+eta) - L(gamma+eta)^2/(1-beta) - L(gamma+eta)^2/2;
    C = (beta^2 L eta^2/2 + M mu (mu+L) beta^2 eta^2/(1-beta)) /
        (1 - beta - mu M + mu (mu+L) beta^2 eta^2/(1-beta)).
    Under the admissible step sizes the denominator is at least (1-beta)/2;
    it is asserted positive rather than silently producing a wrong sign.
    """
    assert 0.0 <= beta < 1.0 and L > 0.0 and mu is not None and mu > 0.0
    step = gamma + eta
    M = step - L * step * step / (1.0 - beta) - L * step * step / 2.0
    cross = mu * (mu + L) * beta * beta * eta * eta / (1.0 - beta)
    denom = 1.0 - beta - mu * M + cross
    assert denom > 0.0, "C undefined: denominator nonpositive (step sizes out of range)"
    C = (beta * beta * L * eta * eta / 2.0 + M * cross) / denom
    return M, C


class VarphiTracker:
    """Online varphi_k evaluation for a constant schedule.

    value() must be read at row k before push()ing that row's grad_sq: the
    geometric sum S_k covers gradients strictly before k (S_1 = 0).
    """

    def __init__(self, schedule, L, mu):
        assert isinstance(schedule, ConstantSchedule)
        self.beta = schedule.beta
        self.M, self.C = pl_constants(schedule.beta, schedule.gamma, schedule.eta, L, mu)
        self.S = 0.0

    def value(self, f_w_gap):
        return f_w_gap + self.C * self.S

    def push(self, grad_sq):
        self.S = self.beta * self.S + grad_sq


def varphi(k, f_w_gap, grad_history, schedule, L, mu):
    """varphi_k from an explicit gradient-norm history (entries j = 1..k-1)."""
    assert k >= 1 and len(grad_history) >= k - 1
    beta = schedule.beta
    _, C = pl_constants(beta, schedule.gamma, schedule.eta, L, mu)
    S = 0.0
    for j in range(1, k):
        S += beta ** (k - 1 - j) * grad_history[j - 1]
    return f_w_gap + C * S


def mbound(k, grad_sq_history, schedule, sigma):
    """Momentum second-moment bound at step k:
    2 (1-beta) sum_{j<=k} beta^(k-j) G_j + 2 (1-beta) sigma^2 / (1+beta),
    with G_j the (seed-averaged) squared gradient norms. k = 0 gives the
    bare noise term, matching m_0 = 0."""
    beta = schedule.beta
    assert 0 <= k <= len(grad_sq_history)
    acc = 0.0
    for j in range(1, k + 1):
        acc += beta ** (k - j) * grad_sq_history[j - 1]
    return 2.0 * (1.0 - beta) * acc + 2.0 * (1.0 - beta) / (1.0 + beta) * sigma * sigma


def mbound_series(grad_sq, schedule, sigma):
    """mbound at every k = 1..len(grad_sq), via the geometric recursion."""
    grad_sq = np.asarray(grad_sq, dtype=float)
    beta = schedule.beta
    out = np.empty(grad_sq.shape[0])
    acc = 0.0
    for i, g in enumerate(grad_sq):
        acc = beta * acc + g
        out[i] = acc
    return 2.0 * (1.0 - beta) * out + 2.0 * (1.0 - beta) / (1.0 + beta) * sigma * sigma


def _need(inputs, key, theorem):
    if key not in inputs or inputs[key] is None:
        raise KeyError("theorem %s needs input %r" % (theorem, key))
    return inputs[key]


def bound_series(theorem, ts, inputs):
    """Guarantee right-hand side evaluated at each t in ts.

    inputs is a dict; which keys are read depends on the theorem:
    gap1 = f(x_1) - f*, dist1_sq = ||x_1 - x*||^2, grad1_sq =
    ||grad f(x_1)||^2, plus sigma, L, mu, C, and the schedule.
    """
    ts = np.asarray(ts, dtype=float)
    assert np.all(ts >= 1)
    s = inputs.get("schedule")
    sigma = float(inputs.get("sigma", 0.0))

    if theorem == "thm-cvx-const":
        gap1 = _need(inputs, "gap1", theorem)
        dist1 = _need(inputs, "dist1_sq", theorem)
        b, g, e = s.beta, s.gamma, s.eta
        return (dist1 / (2.0 * (g + e) * ts)
                + b * gap1 / ((1.0 - b) * ts)
                + (3.0 * b * g / (2.0 * (1.0 - b)) + (g + e) / 2.0) * sigma * sigma)
    if theorem == "thm-cvx-deter":
        gap1 = _need(inputs, "gap1", theorem)
        dist1 = _need(inputs, "dist1_sq", theorem)
        grad1 = _need(inputs, "grad1_sq", theorem)
        b, g, e = s.beta, s.gamma, s.eta
        return (dist1 / (2.0 * (g + e) * ts)
                + b * (gap1 + g * grad1 / 2.0) / ((1.0 - b) * ts))
    if theorem == "conv-hb-deter":
        gap1 = _need(inputs, "gap1", theorem)
        dist1 = _need(inputs, "dist1_sq", theorem)
        b, e = s.beta, s.eta
        assert s.gamma == 0.0
        return dist1 / (2.0 * e * ts) + b * gap1 / ((1.0 - b) * ts)
    if theorem == "conv-nes-deter":
        gap1 = _need(inputs, "gap1", theorem)
        dist1 = _need(inputs, "dist1_sq", theorem)
        grad1 = _need(inputs, "grad1_sq", theorem)
        b, g = s.beta, s.gamma
        return ((1.0 - b) * dist1 / (2.0 * g * ts)
                + b * (gap1 + g * grad1 / 2.0) / ((1.0 - b) * ts))
    if theorem == "thm-accel-det":
        gap1 = _need(inputs, "gap1", theorem)
        dist1 = _need(inputs, "dist1_sq", theorem)
        L = _need(inputs, "L", theorem)
        return 2.0 * (gap1 + L * dist1) / (ts * (ts + 1.0))
    if theorem == "thm-accel-stoch":
        det = bound_series("thm-accel-det", ts, inputs)
        dist1 = _need(inputs, "dist1_sq", theorem)
        C = _need(inputs, "C", theorem)
        assert C > 0.0
        return det + (sigma / np.sqrt(ts)) * (dist1 / C + 11.0 * C / 3.0)
    if theorem == "rate-general":
        gap1 = _need(inputs, "gap1", theorem)
        dist1 = _need(inputs, "dist1_sq", theorem)
        L = _need(inputs, "L", theorem)
        assert isinstance(s, TimeVaryingSchedule)
        t_int = np.asarray(ts, dtype=int)
        assert np.all(t_int <= s.horizon)
        t_max = int(t_int.max())
        Theta = theta_products(s.theta, t_max)
        gt = s.gamma_tilde_array()
        ks = np.arange(1, t_max + 1)
        terms = np.zeros(t_max + 1)       # terms[k] for k >= 1
        terms[1:] = (1.0 / (2.0 * Theta[1:])) * (
            L * s.gamma[ks] ** 2 + s.theta[ks] * gt[ks])
        csum = np.cumsum(terms)
        p1 = float(s.theta[1]) / (2.0 * gt[1] * Theta[1])
        phi1 = gap1 + p1 * dist1
        return Theta[t_int - 1] * (phi1 + sigma * sigma * csum[t_int - 1])
    if theorem == "thm-nc":
        gap1 = _need(inputs, "gap1", theorem)
        L = _need(inputs, "L", theorem)
        b, g, e = s.beta, s.gamma, s.eta
        return (2.0 * gap1 / ((g + e) * ts)
                + (b * b * L * e / (1.0 + b) + L * (g + e)) * sigma * sigma)
    if theorem == "thm-pl":
        gap1 = _need(inputs, "gap1", theorem)
        L = _need(inputs, "L", theorem)
        mu = _need(inputs, "mu", theorem)
        b, g, e = s.beta, s.gamma, s.eta
        rho = 1.0 - mu * (g + e) / 18.0
        floor = (3.0 * b * b * e / (1.0 + b) + g + e) * (9.0 * L / mu) * sigma * sigma
        return rho ** ts * gap1 + floor
    raise ValueError("unknown theorem id %r" % (theorem,))


def bound_rhs(theorem, inputs):
    """Scalar RHS at t = inputs['t']."""
    t = _need(inputs, "t", theorem)
    return float(bound_series(theorem, np.array([t]), inputs)[0])


def _stack_traces(traces):
    """Normalize trace input to one dict whose value arrays are (S, T)."""
    if not isinstance(traces, dict):
        traces = list(traces)
        assert traces
        base_k = traces[0]["k"]
        for tr in traces[1:]:
            assert np.array_equal(tr["k"], base_k), "traces disagree on k grid"
        merged = {"k": base_k}
        for name in traces[0]:
            if name != "k":
                merged[name] = np.stack([tr[name] for tr in traces])
        traces = merged
    out = {"k": np.asarray(traces["k"])}
    for name, arr in traces.items():
        if name == "k":
            continue
        arr = np.asarray(arr, dtype=float)
        out[name] = arr[None, :] if arr.ndim == 1 else arr
    return out


def _column(tr, name, theorem):
    if name not in tr:
        raise KeyError("theorem %s needs trace column %r" % (theorem, name))
    return tr[name]


@dataclass(frozen=True)
class VerifyReport:
    theorem: str
    passed: bool
    max_violation: float
    first_t: int          # -1 when no t violates
    n_seeds: int = 1
    checked: int = 0

    def line(self):
        return "THEOREM %s: %s max_violation=%.6g first_t=%d" % (
            self.theorem, "PASS" if self.passed else "FAIL",
            self.max_violation, self.first_t)


def verify_trace(traces, theorem, inputs):
    """Compare the theorem's empirical quantity against its bound.

    traces: one trace dict (deterministic run) or a list of per-seed dicts /
    a dict of (S, T) arrays from a seed sweep. The empirical series is
        thm-cvx-* and conv-*-deter : f(xbar_t) - f*      (extras column f_xbar)
        thm-accel-det, rate-general: f(y_t) - f*, every t
        thm-accel-stoch            : f(y_t) - f* at the final (tuned) t only
        thm-nc                     : (1/t) sum_{k<=t} ||grad f(x_k)||^2
        thm-pl                     : f(w_{t+1}) - f*, rows shifted by one;
                                     inputs['final_w_gap'] (per-seed array)
                                     adds the t = horizon point.
    Seed sweeps compare mean <= rhs + 2 se; single runs get a 1e-12 relative
    headroom. inputs['check_at'] restricts the checked t values. gap1 and
    grad1_sq default to row-1 trace values; dist1_sq must be supplied where
    the bound needs it.
    """
    assert theorem in THEOREMS, theorem
    tr = _stack_traces(traces)
    ks = tr["k"]
    T = ks.shape[0]
    assert np.array_equal(ks, np.arange(1, T + 1)), "trace rows must be 1..T"
    inputs = dict(inputs)
    f_star = _need(inputs, "f_star", theorem)
    if inputs.get("gap1") is None and "f_x" in tr:
        inputs["gap1"] = float(np.mean(tr["f_x"][:, 0])) - f_star
    if inputs.get("grad1_sq") is None and "grad_sq" in tr:
        inputs["grad1_sq"] = float(np.mean(tr["grad_sq"][:, 0]))

    if theorem in ("thm-cvx-const", "thm-cvx-deter", "conv-hb-deter", "conv-nes-deter"):
        lhs = _column(tr, "f_xbar", theorem) - f_star
        ts = ks.copy()
    elif theorem in ("thm-accel-det", "rate-general"):
        lhs = _column(tr, "f_y", theorem) - f_star
        ts = ks.copy()
    elif theorem == "thm-accel-stoch":
        t_final = int(inputs.get("t") or T)
        assert t_final <= T
        lhs = _column(tr, "f_y", theorem)[:, t_final - 1:t_final] - f_star
        ts = np.array([t_final])
    elif theorem == "thm-nc":
        g = _column(tr, "grad_sq", theorem)
        lhs = np.cumsum(g, axis=1) / ks
        ts = ks.copy()
    elif theorem == "thm-pl":
        f_w = _column(tr, "f_w", theorem)
        lhs = f_w[:, 1:] - f_star             # row t+1 pairs with rhs(t)
        ts = ks[:-1].copy()
        if inputs.get("final_w_gap") is not None:
            fin = np.atleast_1d(np.asarray(inputs["final_w_gap"], dtype=float))
            assert fin.shape[0] == lhs.shape[0]
            lhs = np.concatenate([lhs, fin[:, None]], axis=1)
            ts = np.concatenate([ts, [T]])
    else:
        raise ValueError(theorem)

    if inputs.get("check_at") is not None:
        wanted = sorted(set(int(t) for t in inputs["check_at"]))
        pos = {int(t): i for i, t in enumerate(ts)}
        missing = [t for t in wanted if t not in pos]
        assert not missing, "check_at values outside trace: %s" % missing
        sel = [pos[t] for t in wanted]
        lhs = lhs[:, sel]
        ts = np.asarray(wanted)

    rhs = np.asarray(bound_series(theorem, ts, inputs), dtype=float)
    n_seeds = lhs.shape[0]
    mean = lhs.mean(axis=0)
    if n_seeds > 1:
        se = lhs.std(axis=0, ddof=1) / math.sqrt(n_seeds)
        viol = mean - rhs - 2.0 * se
    else:
        viol = mean - rhs - DETERMINISTIC_HEADROOM * np.maximum(1.0, np.abs(rhs))
    worst = int(np.argmax(viol))
    max_violation = float(viol[worst])
    bad = np.nonzero(viol > 0)[0]
    first_t = int(ts[bad[0]]) if bad.size else -1
    return VerifyReport(theorem, bool(max_violation <= 0.0), max_violation,
                        first_t, n_seeds, int(ts.shape[0]))
