"""Native forms of five classical momentum methods and their exact parameter
maps into the generalized update, for twin-run equivalence checks.

Each method's recursion is implemented exactly as usually displayed, with
first-iteration conventions chosen so the first native step equals the first
generalized step with m_0 = 0 (HB: momentum term absent at k=1; NAG/MASS:
y_1 = x_1; SUM: z_1 = x_1; QHM: m_0 = 0). Any other convention breaks
equivalence already at k=1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import RngStream, RunState
from .engine import gsgdm_step
from .schedules import ConstantSchedule, nag_classic

METHODS = ("hb", "nag", "sum", "qhm", "mass")


@dataclass
class VariantState:
    """Iterate plus the auxiliaries the method's recursion needs."""

    method: str
    k: int
    x: np.ndarray
    x_prev: np.ndarray | None = None   # hb
    y: np.ndarray | None = None        # nag, mass
    z: np.ndarray | None = None        # sum
    m: np.ndarray | None = None        # qhm


def init_variant(method, x1):
    x1 = np.asarray(x1, dtype=float)
    assert method in METHODS, method
    st = VariantState(method=method, k=1, x=x1.copy())
    if method == "hb":
        st.x_prev = x1.copy()          # x_0 := x_1, momentum term vanishes at k=1
    elif method in ("nag", "mass"):
        st.y = x1.copy()
    elif method == "sum":
        st.z = x1.copy()               # z_1 = x_1 - s a g_0 with g_0 := 0
    elif method == "qhm":
        st.m = np.zeros_like(x1)
    return st


def variant_step(state, params, g):
    """One step of the native recursion, exactly as displayed."""
    g = np.asarray(getattr(g, "g", g), dtype=float)
    assert g.shape == state.x.shape
    m = state.method
    x = state.x
    if m == "hb":
        beta, eta = params["beta"], params["eta"]
        assert state.x_prev is not None
        x_new = x + beta * (x - state.x_prev) - (1.0 - beta) * eta * g
        return VariantState(m, state.k + 1, x_new, x_prev=x)
    if m == "nag":
        beta, gamma = params["beta"], params["gamma"]
        assert state.y is not None
        y_new = x - gamma * g
        x_new = y_new + beta * (y_new - state.y)
        return VariantState(m, state.k + 1, x_new, y=y_new)
    if m == "sum":
        beta, alpha, s = params["beta"], params["alpha"], params["s"]
        assert state.z is not None
        y_new = x - alpha * g
        z_new = x - s * alpha * g
        x_new = y_new + beta * (z_new - state.z)
        return VariantState(m, state.k + 1, x_new, z=z_new)
    if m == "qhm":
        alpha, nu, beta = params["alpha"], params["nu"], params["beta"]
        assert state.m is not None
        m_new = beta * state.m + (1.0 - beta) * g
        x_new = x - alpha * ((1.0 - nu) * g + nu * m_new)
        return VariantState(m, state.k + 1, x_new, m=m_new)
    if m == "mass":
        beta, alpha, lam = params["beta"], params["alpha"], params["lam"]
        assert state.y is not None
        y_new = x - alpha * g
        x_new = (1.0 + beta) * y_new - beta * state.y + lam * g
        return VariantState(m, state.k + 1, x_new, y=y_new)
    raise ValueError("unknown method %r" % (m,))


def map_to_gsgdm(method, horizon=None, **params):
    """Exact generalized-update parameters reproducing the native method.

        hb(beta, eta)         -> (beta, 0, eta)
        nag(beta, gamma)      -> (beta, gamma, beta gamma / (1 - beta))
        sum(beta, alpha, s)   -> (beta, s alpha, alpha/(1-beta) - s alpha)
        qhm(beta, alpha, nu)  -> (beta, alpha (1 - nu), alpha nu)
        mass(beta, alpha, lam)-> (beta, alpha, (beta alpha - lam)/(1 - beta))
        nag-classic(gamma)    -> time-varying embedding (needs horizon)

    Native parameters are validated against their stated ranges; nag with
    beta = 0 is rejected (the coupling divides by beta).
    """
    if method == "nag-classic":
        assert horizon is not None, "nag-classic embedding needs a horizon"
        return nag_classic(params["gamma"], horizon)
    assert method in METHODS, method
    beta = params["beta"]
    assert 0.0 <= beta < 1.0
    if method == "hb":
        eta = params["eta"]
        assert eta > 0.0
        return ConstantSchedule(beta, 0.0, eta)
    if method == "nag":
        gamma = params["gamma"]
        if beta == 0.0:
            raise ValueError("nag coupling needs beta > 0")
        assert gamma > 0.0
        return ConstantSchedule(beta, gamma, beta * gamma / (1.0 - beta))
    if method == "sum":
        alpha, s = params["alpha"], params["s"]
        assert alpha > 0.0
        assert 0.0 <= s <= 1.0 / (1.0 - beta)
        return ConstantSchedule(beta, s * alpha, alpha / (1.0 - beta) - s * alpha)
    if method == "qhm":
        alpha, nu = params["alpha"], params["nu"]
        assert alpha > 0.0
        assert 0.0 <= nu <= 1.0
        return ConstantSchedule(beta, alpha * (1.0 - nu), alpha * nu)
    if method == "mass":
        alpha, lam = params["alpha"], params["lam"]
        assert alpha > 0.0
        assert lam >= 0.0
        return ConstantSchedule(beta, alpha, (beta * alpha - lam) / (1.0 - beta))
    raise ValueError(method)


def schedule_matches_method(method, schedule, tol=1e-12):
    """Check that a constant schedule lies in a named method's family.

    Raises ValueError when it does not; the harness maps that to a usage
    error. 'gsgdm' accepts anything; 'nag-classic' expects its dedicated
    time-varying schedule.
    """
    if method == "gsgdm":
        return
    if method == "nag-classic":
        if getattr(schedule, "kind", None) != "nag-classic":
            raise ValueError("method nag-classic needs schedule nag-classic:gamma=...")
        return
    if not isinstance(schedule, ConstantSchedule):
        raise ValueError("method %r needs a constant schedule" % (method,))
    b, g, e = schedule.beta, schedule.gamma, schedule.eta
    if method == "sgd":
        if b != 0.0:
            raise ValueError("sgd needs beta=0")
        return
    if method == "hb":
        if g != 0.0:
            raise ValueError("hb needs gamma=0")
        return
    if method == "nag":
        if b == 0.0:
            raise ValueError("nag needs beta > 0")
        want = b * g / (1.0 - b)
        if abs(e - want) > tol * max(1.0, abs(e), abs(want)):
            raise ValueError("nag needs eta = beta*gamma/(1-beta) = %g, got %g" % (want, e))
        return
    if method == "sum":
        if e < 0.0 or g + e <= 0.0:
            raise ValueError("sum needs eta >= 0 and gamma + eta > 0")
        return
    if method == "qhm":
        if e < 0.0 or g < 0.0 or g + e <= 0.0:
            raise ValueError("qhm needs gamma >= 0, eta >= 0, gamma + eta > 0")
        return
    if method == "mass":
        lam = b * g - (1.0 - b) * e
        if g <= 0.0 or lam < 0.0:
            raise ValueError("mass needs gamma > 0 and beta*gamma - (1-beta)*eta >= 0")
        return
    raise ValueError("unknown method %r" % (method,))


def twin_run(method, params, problem, x1, horizon, sigma=0.0, seed=0):
    """Run the native recursion and its generalized embedding in lockstep on
    one shared noise stream; return (max iterate deviation, max iterate norm).

    Both runs see the same additive noise draw each step applied to their own
    exact gradient, which is what sharing the gradient oracle means here.
    """
    x1 = np.asarray(x1, dtype=float)
    sched = map_to_gsgdm(method, horizon=horizon, **params)
    stream = RngStream(seed)
    classic = method == "nag-classic"
    native = init_variant("nag" if classic else method, x1)
    gen = RunState(k=1, x=x1.copy(), m=np.zeros_like(x1))
    max_dev = 0.0
    max_norm = float(np.linalg.norm(x1))
    d = problem.dim
    for k in range(1, horizon + 1):
        eps = stream.normal(d) * (sigma / np.sqrt(d)) if sigma > 0.0 else 0.0
        g_nat = problem.grad(native.x) + eps
        g_gen = problem.grad(gen.x) + eps
        if classic:
            # momentum weight grows as (k-1)/(k+2); zero at the first step
            step_params = {"beta": (k - 1.0) / (k + 2.0), "gamma": params["gamma"]}
            native = variant_step(native, step_params, g_nat)
        else:
            native = variant_step(native, params, g_nat)
        gen = gsgdm_step(gen, sched.step(k), g_gen)
        max_dev = max(max_dev, float(np.linalg.norm(native.x - gen.x)))
        max_norm = max(max_norm, float(np.linalg.norm(gen.x)))
    return max_dev, max_norm
