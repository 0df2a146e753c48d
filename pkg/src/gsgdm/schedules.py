"""Parameter schedules and admissibility checks.

A schedule produces, for each iteration k, the triple (beta_k, gamma_k,
eta_k) consumed by the update, plus a certificate sequence theta_k when the
schedule is built for an accelerated rate. Validators turn each step-size
condition into a residual; a condition holds at k when its residual is
>= -1e-12, equality conditions contribute -|residual| so the same rule
applies uniformly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ScheduleStep

RESIDUAL_TOL = 1e-12


@dataclass(frozen=True)
class ConstantSchedule:
    """Fixed (beta, gamma, eta) for every iteration."""

    beta: float
    gamma: float
    eta: float

    kind = "const"

    def __post_init__(self):
        assert 0.0 <= self.beta < 1.0
        assert self.gamma >= 0.0
        assert math.isfinite(self.eta)

    @property
    def effective_step(self):
        # the implicit SGD step size of the averaged sequence
        return self.gamma + self.eta

    def step(self, k):
        assert k >= 1
        return ScheduleStep(k=k, beta=self.beta, gamma=self.gamma, eta=self.eta)


class TimeVaryingSchedule:
    """Per-iteration parameter arrays with a theta certificate sequence.

    Arrays are 1-indexed by iteration (slot 0 unused, nan). beta/gamma/eta
    cover k = 1..horizon; theta covers k = 1..horizon+2 because step-size
    conditions at k reach forward to theta_{k+2}.
    """

    kind = "varying"

    def __init__(self, beta, gamma, eta, theta, horizon, notes=()):
        self.horizon = int(horizon)
        assert self.horizon >= 1
        self.beta = np.asarray(beta, dtype=float)
        self.gamma = np.asarray(gamma, dtype=float)
        self.eta = np.asarray(eta, dtype=float)
        self.theta = np.asarray(theta, dtype=float)
        assert self.beta.shape == (self.horizon + 1,)
        assert self.gamma.shape == (self.horizon + 1,)
        assert self.eta.shape == (self.horizon + 1,)
        assert self.theta.shape == (self.horizon + 3,)
        self.notes = tuple(notes)

    def step(self, k):
        assert 1 <= k <= self.horizon
        return ScheduleStep(
            k=k, beta=float(self.beta[k]), gamma=float(self.gamma[k]),
            eta=float(self.eta[k]), theta=float(self.theta[k]),
        )

    def gamma_tilde(self, k):
        """Step size of the certificate sequence v: gamma_k + (1-beta_k) eta_k / theta_{k+1}."""
        assert 1 <= k <= self.horizon
        return float(self.gamma[k] + (1.0 - self.beta[k]) * self.eta[k] / self.theta[k + 1])

    def gamma_tilde_array(self):
        ks = np.arange(1, self.horizon + 1)
        out = np.full(self.horizon + 1, np.nan)
        out[1:] = self.gamma[ks] + (1.0 - self.beta[ks]) * self.eta[ks] / self.theta[ks + 1]
        return out


class AcceleratedSchedule(TimeVaryingSchedule):
    """Momentum schedule achieving the fast rate on smooth convex problems.

    With step gamma in (0, 1/L] and any beta1 in [0, 1):
        eta_1   = (L gamma^2 - gamma) / (2 (1 - beta1))
        eta_k   = (k / (k+3)) eta_{k-1} + ((k+1) L gamma^2 - 2 gamma) / (k+3)
        beta_k  = k eta_{k-1} / ((k+3) eta_k)          for k >= 2
        theta_k = 2 / (k + 2)
    For gamma < 1/L the recursion can push beta_k outside [0, 1); the
    schedule is still well defined and the builder records that in
    beta_in_range and notes instead of guessing admissibility. An exact zero
    eta_k for k >= 2 would make beta_{k+1} undefined and is rejected.
    """

    kind = "accel"

    def __init__(self, L, horizon, gamma, beta1=0.9):
        assert L > 0.0 and horizon >= 1
        assert 0.0 <= beta1 < 1.0
        if not 0.0 < gamma <= 1.0 / L:
            raise ValueError("gamma must lie in (0, 1/L]; got %g with L=%g" % (gamma, L))
        t = int(horizon)
        beta = np.full(t + 1, np.nan)
        eta = np.full(t + 1, np.nan)
        gam = np.full(t + 1, np.nan)
        gam[1:] = gamma
        beta[1] = beta1
        eta[1] = (L * gamma * gamma - gamma) / (2.0 * (1.0 - beta1))
        for k in range(2, t + 1):
            eta[k] = (k / (k + 3.0)) * eta[k - 1] + ((k + 1) * L * gamma * gamma - 2.0 * gamma) / (k + 3.0)
            if eta[k] == 0.0:
                raise ValueError("eta_%d is exactly zero; momentum weights undefined" % k)
            beta[k] = k * eta[k - 1] / ((k + 3.0) * eta[k])
        theta = np.full(t + 3, np.nan)
        ks = np.arange(1, t + 3)
        theta[1:] = 2.0 / (ks + 2.0)
        in_range = bool(np.all((beta[1:] >= 0.0) & (beta[1:] < 1.0)))
        notes = () if in_range else (
            "beta_k leaves [0, 1) for some k (expected when gamma < 1/L)",
        )
        super().__init__(beta, gam, eta, theta, t, notes)
        self.L = float(L)
        self.gamma_const = float(gamma)
        self.beta1 = float(beta1)
        self.beta_in_range = in_range


def auto_gamma(L, horizon, sigma, C):
    """Horizon-tuned step: min(1/L, t^(-3/4) sqrt(C / (sigma L))).

    Balances the deterministic fast term against the noise term; only
    meaningful when there is noise to balance against.
    """
    assert L > 0.0 and horizon >= 1
    if not (sigma > 0.0 and C is not None and C > 0.0):
        raise ValueError("gamma=auto needs sigma > 0 and C > 0; use an explicit gamma otherwise")
    return min(1.0 / L, horizon ** -0.75 * math.sqrt(C / (sigma * L)))


def build_accelerated(L, horizon, gamma="auto", beta1=0.9, sigma=0.0, C=None):
    """Construct AcceleratedSchedule, resolving gamma='auto' via auto_gamma."""
    if gamma == "auto":
        gamma = auto_gamma(L, horizon, sigma, C)
    return AcceleratedSchedule(L, horizon, float(gamma), beta1)


def nag_classic(gamma, horizon):
    """Exact momentum-form embedding of the classical accelerated gradient
    recursion y_{k+1} = x_k - gamma g_k, x_{k+1} = y_{k+1} + c_k (y_{k+1} - y_k)
    with c_k = (k - 1) / (k + 2) and constant step.

    The embedding solves the Nesterov-coupling constraints for that
    coefficient: beta_1 = 0, eta_1 = 0, and for k >= 2 beta_k = (k-2)/(k+2),
    eta_k = (k-1) gamma / 4, with gamma_k constant. The induced momentum
    coefficient beta_k eta_k / eta_{k-1} equals c_k wherever defined.
    theta_k = 2/(k+1) (theta_1 = 2/3) is the natural certificate; this
    schedule is known not to satisfy the full accelerated step-size
    conditions, and the validator reports that honestly.
    """
    assert gamma > 0.0 and horizon >= 1
    t = int(horizon)
    beta = np.full(t + 1, np.nan)
    eta = np.full(t + 1, np.nan)
    gam = np.full(t + 1, np.nan)
    gam[1:] = gamma
    beta[1] = 0.0
    eta[1] = 0.0
    for k in range(2, t + 1):
        beta[k] = (k - 2.0) / (k + 2.0)
        eta[k] = (k - 1.0) * gamma / 4.0
    theta = np.full(t + 3, np.nan)
    theta[1] = 2.0 / 3.0
    ks = np.arange(2, t + 3)
    theta[2:] = 2.0 / (ks + 1.0)
    sched = TimeVaryingSchedule(beta, gam, eta, theta, t)
    sched.kind = "nag-classic"
    sched.gamma_const = float(gamma)
    return sched


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of checking a theorem's parameter conditions.

    residuals holds the worst (most negative) value of each condition over
    all checked iterations; the report passes iff every residual is
    >= -1e-12. Equality conditions are stored as -|mismatch| so the single
    rule covers them too. first_fail_k is the earliest iteration where any
    condition breaks (None for constant schedules or full passes).
    """

    theorem: str
    passed: bool
    residuals: dict
    first_fail_k: int | None = None
    notes: tuple = ()

    def describe(self):
        lines = ["%s: %s" % (self.theorem, "PASS" if self.passed else "FAIL")]
        for name in sorted(self.residuals):
            lines.append("  condition %s: worst residual %.6g" % (name, self.residuals[name]))
        if self.first_fail_k is not None:
            lines.append("  first failing k: %d" % self.first_fail_k)
        for note in self.notes:
            lines.append("  note: %s" % note)
        return "\n".join(lines)


def _report(theorem, residuals, first_fail_k=None, notes=()):
    passed = all(r >= -RESIDUAL_TOL for r in residuals.values())
    return ValidationReport(theorem, passed, residuals, first_fail_k, tuple(notes))


def validate_convex_constant(schedule, L, deterministic=False):
    """Step-size conditions for the constant-parameter convex guarantees.

    Stochastic regime: gamma <= 1/L and 0 < gamma + eta <= 1/L.
    Deterministic regime: gamma <= 1/L and -gamma < eta <= 1/L +
    (2 beta - 1) gamma / (1 - beta), a strictly wider eta window.
    """
    assert isinstance(schedule, ConstantSchedule)
    assert L > 0.0
    b, g, e = schedule.beta, schedule.gamma, schedule.eta
    if deterministic:
        residuals = {
            "gamma-le-inv-L": 1.0 / L - g,
            "step-pos": g + e,
            "eta-le-upper": 1.0 / L + (2.0 * b - 1.0) * g / (1.0 - b) - e,
        }
        return _report("thm-cvx-deter", residuals)
    residuals = {
        "gamma-le-inv-L": 1.0 / L - g,
        "step-pos": g + e,
        "step-le-inv-L": 1.0 / L - (g + e),
    }
    return _report("thm-cvx-const", residuals)


def validate_nonconvex_constant(schedule, L, pl=False):
    """Step-size conditions for the nonconvex (and PL) guarantees.

    Nonconvex: eta > 0 and 0 < gamma + eta <= (1 - beta) / (3 L).
    PL: eta > 0 and 0 < gamma + eta <= min((1-beta)/(2L), (1-beta)/(8 beta^2 L)).
    """
    assert isinstance(schedule, ConstantSchedule)
    assert L > 0.0
    b, g, e = schedule.beta, schedule.gamma, schedule.eta
    if pl:
        cap = (1.0 - b) / (2.0 * L)
        if b > 0.0:
            cap = min(cap, (1.0 - b) / (8.0 * b * b * L))
        theorem = "thm-pl"
    else:
        cap = (1.0 - b) / (3.0 * L)
        theorem = "thm-nc"
    residuals = {
        "eta-pos": e,
        "step-pos": g + e,
        "step-le-cap": cap - (g + e),
    }
    return _report(theorem, residuals)


def validate_timevarying(schedule, L):
    """All four time-varying conditions, checked at every k <= horizon - 1.

    cond-beta (k >= 2), equality: beta_k eta_k = theta_{k+1} (1/theta_k - 1)
        eta_{k-1}, checked in this multiplied-through form (defined even when
        eta_{k-1} = 0) and normalized by max(1, |sides|).
    lr-0, strict positivity: gamma~_k = gamma_k + (1-beta_k) eta_k /
        theta_{k+1} > 0.
    lr-1: 2 - L gamma_k - theta_k (1-beta_k) eta_k / (theta_{k+1} gamma_k)
        - theta_k >= 0; when gamma_k = 0 the display divides by zero, so the
        form multiplied through by gamma_k is used instead.
    lr-2, monotone certificate weights: theta_k / (theta_{k+1} gamma_k +
        (1-beta_k) eta_k) >= theta_{k+2} / ((1 - theta_{k+1}) (theta_{k+2}
        gamma_{k+1} + (1-beta_{k+1}) eta_{k+1})), normalized by the larger
        side when above 1.

    Also requires theta_k in (0, 1) wherever referenced. beta_k outside
    [0, 1) is reported as a note, not a failure.
    """
    assert isinstance(schedule, TimeVaryingSchedule)
    assert L > 0.0
    t = schedule.horizon
    beta, gam, eta, theta = schedule.beta, schedule.gamma, schedule.eta, schedule.theta
    worst = {"cond-beta": math.inf, "lr-0": math.inf, "lr-1": math.inf, "lr-2": math.inf,
             "theta-range": math.inf}
    first_fail = None
    notes = list(schedule.notes)

    def push(name, k, value):
        nonlocal first_fail
        if value < worst[name]:
            worst[name] = value
        if value < -RESIDUAL_TOL and (first_fail is None or k < first_fail):
            first_fail = k

    for k in range(1, t):
        push("theta-range", k, min(theta[k], 1.0 - theta[k]))
        if k >= 2:
            lhs = beta[k] * eta[k]
            rhs = theta[k + 1] * (1.0 / theta[k] - 1.0) * eta[k - 1]
            scale = max(1.0, abs(lhs), abs(rhs))
            push("cond-beta", k, -abs(lhs - rhs) / scale)
        gt_k = gam[k] + (1.0 - beta[k]) * eta[k] / theta[k + 1]
        push("lr-0", k, gt_k)
        if gam[k] > 0.0:
            push("lr-1", k, 2.0 - L * gam[k]
                 - theta[k] * (1.0 - beta[k]) * eta[k] / (theta[k + 1] * gam[k]) - theta[k])
        else:
            push("lr-1", k, gam[k] * (2.0 - L * gam[k] - theta[k])
                 - theta[k] * (1.0 - beta[k]) * eta[k] / theta[k + 1])
        den_k = theta[k + 1] * gam[k] + (1.0 - beta[k]) * eta[k]
        den_n = (1.0 - theta[k + 1]) * (theta[k + 2] * gam[k + 1] + (1.0 - beta[k + 1]) * eta[k + 1])
        if den_k <= 0.0 or den_n <= 0.0:
            push("lr-2", k, -math.inf)
            continue
        lhs = theta[k] / den_k
        rhs = theta[k + 2] / den_n
        push("lr-2", k, (lhs - rhs) / max(1.0, abs(lhs), abs(rhs)))

    for name in worst:
        if math.isinf(worst[name]) and worst[name] > 0:
            worst[name] = 0.0          # condition had no applicable k; vacuous
    ks = np.arange(1, t + 1)
    if not np.all((beta[ks] >= 0.0) & (beta[ks] < 1.0)):
        note = "beta_k outside [0, 1) at some k"
        if note not in notes and not any("beta_k" in n for n in notes):
            notes.append(note)
    return _report("thm-cvx-varying", worst, first_fail, notes)


def _parse_kv(body, allowed):
    out = {}
    if body:
        for item in body.split(","):
            if "=" not in item:
                raise ValueError("expected key=value, got %r" % item)
            key, val = item.split("=", 1)
            key = key.strip()
            if key not in allowed:
                raise ValueError("unknown schedule key %r" % key)
            if key in out:
                raise ValueError("duplicate schedule key %r" % key)
            out[key] = val.strip()
    return out


def parse_schedule(text, L=None, horizon=None, sigma=0.0):
    """Build a schedule from its descriptor string.

    Grammar:
        const:beta=B,gamma=G,eta=E
        accel:gamma=G|auto[,beta1=B1][,C=C]
        nag-classic:gamma=G
    accel and nag-classic need the horizon; accel also needs L. Malformed
    descriptors raise ValueError.
    """
    head, _, body = text.partition(":")
    head = head.strip()
    if head == "const":
        kv = _parse_kv(body, {"beta", "gamma", "eta"})
        missing = {"beta", "gamma", "eta"} - set(kv)
        if missing:
            raise ValueError("const schedule needs %s" % ", ".join(sorted(missing)))
        return ConstantSchedule(float(kv["beta"]), float(kv["gamma"]), float(kv["eta"]))
    if head == "accel":
        kv = _parse_kv(body, {"gamma", "beta1", "C"})
        if "gamma" not in kv:
            raise ValueError("accel schedule needs gamma")
        if L is None or horizon is None:
            raise ValueError("accel schedule needs the problem's L and a horizon")
        gamma = kv["gamma"] if kv["gamma"] == "auto" else float(kv["gamma"])
        beta1 = float(kv.get("beta1", 0.9))
        C = float(kv["C"]) if "C" in kv else None
        return build_accelerated(L, horizon, gamma=gamma, beta1=beta1, sigma=sigma, C=C)
    if head == "nag-classic":
        kv = _parse_kv(body, {"gamma"})
        if "gamma" not in kv:
            raise ValueError("nag-classic schedule needs gamma")
        if horizon is None:
            raise ValueError("nag-classic schedule needs a horizon")
        return nag_classic(float(kv["gamma"]), horizon)
    raise ValueError("unknown schedule family %r" % head)
