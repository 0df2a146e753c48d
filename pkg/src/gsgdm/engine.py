"""The generalized momentum stepper and auxiliary-sequence bookkeeping.

One update is
    m_k = beta_k m_{k-1} + (1 - beta_k) g_k
    x_{k+1} = x_k - gamma_k g_k - eta_k m_k
with m_0 = 0. Three auxiliary sequences are maintained on demand:
    w_k = x_k - (beta eta / (1 - beta)) m_{k-1}   (constant schedules)
    y_{k+1} = x_k - gamma_k g_k,  y_1 = x_1
    v_k = x_k + (1/theta_k - 1)(x_k - y_k)        (theta-bearing schedules)
w and v both evolve by plain SGD steps (with effective step sizes gamma+eta
and gamma_k + (1-beta_k) eta_k / theta_{k+1} respectively); the recorded
residual columns measure how exactly that holds along the actual run.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import analysis
from .core import RngStream, RunState, ScheduleStep
from .problems import Noise, sample_gradient
from .schedules import ConstantSchedule, TimeVaryingSchedule

TRACK_TOKENS = frozenset(
    {"w", "v", "y", "phi", "varphi", "residuals", "bounds", "xbar"}
)


def gsgdm_step(state, step, g):
    """One update. Accepts the gradient as an array or a GradientSample."""
    g = np.asarray(getattr(g, "g", g), dtype=float)
    assert state.k == step.k
    assert g.shape == state.x.shape, "gradient/iterate dimension mismatch"
    m_new = step.beta * state.m + (1.0 - step.beta) * g
    x_new = state.x - step.gamma * g - step.eta * m_new
    return RunState(k=state.k + 1, x=x_new, m=m_new, y=state.y,
                    xbar=state.xbar, g_prev=g)


def update_w(state, schedule):
    """Momentum-corrected point w_k = x_k - (beta eta / (1-beta)) m_{k-1}.

    Defined for constant schedules only. Equals x_1 at k=1 because m_0 = 0,
    and equals x_k for beta = 0.
    """
    assert isinstance(schedule, ConstantSchedule), "w needs a constant schedule"
    factor = schedule.beta * schedule.eta / (1.0 - schedule.beta)
    return state.x - factor * state.m


def update_v_y(state, step):
    """Certificate pair (v_k, y_k) at the current iterate.

    y is maintained by the run loop (y_1 = x_1, then y_{k+1} = x_k -
    gamma_k g_k); v is reconstructed as x_k + (1/theta_k - 1)(x_k - y_k),
    which avoids storing x_{k-1} and g_{k-1}.
    """
    assert step.theta is not None, "v/y need a theta-bearing schedule"
    y = state.y if state.y is not None else state.x
    v = state.x + (1.0 / step.theta - 1.0) * (state.x - y)
    return v, y


@dataclass
class EngineConfig:
    """A single run: problem, schedule, noise, horizon, randomness, trackers.

    Exactly one source of randomness applies: an explicit stream, or a seed
    from which one is built. x1, when omitted, is drawn from that stream as
    a standard normal (consuming 2*ceil(d/2) words), which is the harness
    convention for the run-0 stream. bound, when given, is a length-horizon
    array stored into the trace's bound column.
    """

    problem: object
    schedule: object
    noise: Noise = field(default_factory=Noise)
    horizon: int = 1000
    seed: int | None = None
    stream: RngStream | None = None
    x1: np.ndarray | None = None
    track: frozenset = frozenset()
    bound: np.ndarray | None = None
    stop_at_fixed_point: bool = False


@dataclass
class RunResult:
    """Trace columns (arrays indexed by row, iteration k = row + 1), extra
    in-memory series that are not part of the CSV schema, and the state after
    the last completed step (x_{K+1}, m_K, and auxiliaries)."""

    columns: dict
    extras: dict
    final: RunState
    diverged: bool = False
    divergence_step: int | None = None

    def merged(self):
        return {**self.columns, **self.extras}


def _resolve_track(track, schedule):
    track = set(track)
    unknown = track - TRACK_TOKENS
    assert not unknown, "unknown track tokens: %s" % sorted(unknown)
    if "phi" in track:
        track |= {"v", "y"}
    if "varphi" in track:
        track |= {"w"}
    if "residuals" in track:
        track |= {"w"} if isinstance(schedule, ConstantSchedule) else {"v", "y"}
    if "v" in track:
        track |= {"y"}
    if "w" in track:
        assert isinstance(schedule, ConstantSchedule), "w needs a constant schedule"
    if "v" in track or "y" in track:
        assert isinstance(schedule, TimeVaryingSchedule), "v/y need a theta schedule"
    return track


def run(config):
    """Execute config.horizon steps, recording one trace row per iteration.

    Row k holds quantities evaluated at iteration k: f(x_k), ||grad f(x_k)||^2
    exactly, f(w_k)/f(y_k) for tracked auxiliaries, ||m_k||^2 after the step,
    and one-step identity residuals. On a non-finite value the run aborts,
    keeping the finite prefix and flagging divergence.
    """
    p, s, noise = config.problem, config.schedule, config.noise
    T = int(config.horizon)
    assert T >= 1
    track = _resolve_track(config.track, s)

    stream = config.stream
    if stream is None and config.seed is not None:
        stream = RngStream(config.seed)
    x1 = config.x1
    if x1 is None:
        assert stream is not None, "drawing x1 needs a stream or seed"
        x1 = stream.normal(p.dim)
    x1 = np.asarray(x1, dtype=float)
    assert x1.shape == (p.dim,)
    if noise.kind != "none":
        assert stream is not None, "stochastic gradients need a stream or seed"

    cols = {
        "k": np.arange(1, T + 1, dtype=np.int64),
        "f_x": np.empty(T), "grad_sq": np.empty(T), "m_sq": np.empty(T),
    }
    for name, token in (("f_w", "w"), ("f_y", "y")):
        if token in track:
            cols[name] = np.empty(T)
    if "residuals" in track:
        cols["resid_w" if isinstance(s, ConstantSchedule) else "resid_v"] = np.empty(T)
    if "bounds" in track:
        assert config.bound is not None and len(config.bound) == T
        cols["bound"] = np.asarray(config.bound, dtype=float)
    if "phi" in track:
        assert p.f_star is not None and p.x_star is not None
        cols["phi"] = np.empty(T)
        phi_tracker = analysis.PhiTracker(s, p.x_star)
    if "varphi" in track:
        assert p.f_star is not None and p.mu is not None
        cols["varphi"] = np.empty(T)
        varphi_tracker = analysis.VarphiTracker(s, p.L, p.mu)
    extras = {}
    if "xbar" in track:
        extras["f_xbar"] = np.empty(T)
    if "v" in track and p.x_star is not None:
        extras["dist_v_sq"] = np.empty(T)

    state = RunState(k=1, x=x1.copy(), m=np.zeros(p.dim))
    if "y" in track:
        state.y = x1.copy()
    if "xbar" in track:
        state.xbar = np.zeros(p.dim)

    n_rows = 0
    diverged = False
    div_step = None
    for k in range(1, T + 1):
        x = state.x
        if not np.all(np.isfinite(x)):
            diverged, div_step = True, k
            break
        fx = float(p.f(x))
        gx = p.grad(x)
        gsq = float(gx @ gx)
        if not (np.isfinite(fx) and np.isfinite(gsq)):
            diverged, div_step = True, k
            break
        step = s.step(k)
        if config.stop_at_fixed_point and noise.kind == "none":
            m_next = step.beta * state.m + (1.0 - step.beta) * gx
            if not np.any(step.gamma * gx + step.eta * m_next):
                break                      # zero displacement: row not recorded
        i = k - 1
        cols["f_x"][i] = fx
        cols["grad_sq"][i] = gsq
        if "w" in track:
            w_cur = update_w(state, s)
            cols["f_w"][i] = float(p.f(w_cur))
        if "y" in track:
            v_cur, y_cur = update_v_y(state, step)
            cols["f_y"][i] = float(p.f(y_cur))
            if "dist_v_sq" in extras:
                diff = v_cur - p.x_star
                extras["dist_v_sq"][i] = float(diff @ diff)
        if "phi" in track:
            cols["phi"][i] = phi_tracker.value(k, cols["f_y"][i] - p.f_star, v_cur)
        if "varphi" in track:
            cols["varphi"][i] = varphi_tracker.value(cols["f_w"][i] - p.f_star)
        if "xbar" in track:
            state.xbar += (x - state.xbar) / k
            extras["f_xbar"][i] = float(p.f(state.xbar))

        sample = sample_gradient(p, noise, x, stream, exact=gx)
        new_state = gsgdm_step(state, step, sample)
        cols["m_sq"][i] = float(new_state.m @ new_state.m)
        if "residuals" in track and isinstance(s, ConstantSchedule):
            w_next = update_w(new_state, s)
            r = w_next - w_cur + (s.gamma + s.eta) * sample.g
            cols["resid_w"][i] = float(np.linalg.norm(r))
        if "y" in track:
            new_state.y = x - step.gamma * sample.g
            if "residuals" in track and not isinstance(s, ConstantSchedule):
                theta_next = float(s.theta[k + 1])
                v_next = new_state.x + (1.0 / theta_next - 1.0) * (new_state.x - new_state.y)
                r = v_next - v_cur + s.gamma_tilde(k) * sample.g
                cols["resid_v"][i] = float(np.linalg.norm(r))
        if "varphi" in track:
            varphi_tracker.push(gsq)
        state = new_state
        n_rows = k

    if n_rows < T:
        cols = {name: arr[:n_rows] for name, arr in cols.items()}
        extras = {name: arr[:n_rows] for name, arr in extras.items()}
    return RunResult(cols, extras, state, diverged, div_step)


def run_many(problem, schedule, noise, horizon, x1, streams, track=frozenset()):
    """Vectorized seed sweep: one synchronized run per stream in `streams`.

    Supports exact or additive-noise gradients only (mini-batch sweeps go
    through scalar run calls) and the w/y/v/xbar trackers. Columns come back
    with shape (n_streams, horizon); k stays (horizon,). All runs share x1.
    Any non-finite value raises: sweeps are meant for regimes already known
    not to diverge, and a divergent seed would silently poison seed means.
    """
    p, s, T = problem, schedule, int(horizon)
    assert noise.kind in ("none", "gaussian")
    track = _resolve_track(track, s)
    assert "phi" not in track and "varphi" not in track and "bounds" not in track
    S = streams.states.shape[0]
    x1 = np.asarray(x1, dtype=float)
    assert x1.shape == (p.dim,)

    X = np.tile(x1, (S, 1))
    M = np.zeros((S, p.dim))
    cols = {
        "k": np.arange(1, T + 1, dtype=np.int64),
        "f_x": np.empty((S, T)), "grad_sq": np.empty((S, T)), "m_sq": np.empty((S, T)),
    }
    for name, token in (("f_w", "w"), ("f_y", "y")):
        if token in track:
            cols[name] = np.empty((S, T))
    if "residuals" in track:
        cols["resid_w" if isinstance(s, ConstantSchedule) else "resid_v"] = np.empty((S, T))
    extras = {}
    if "xbar" in track:
        extras["f_xbar"] = np.empty((S, T))
        XBAR = np.zeros((S, p.dim))
    if "v" in track and p.x_star is not None:
        extras["dist_v_sq"] = np.empty((S, T))
    Y = X.copy() if "y" in track else None
    noise_scale = noise.sigma / np.sqrt(p.dim) if noise.kind == "gaussian" else 0.0

    for k in range(1, T + 1):
        i = k - 1
        step = s.step(k)
        G = p.grad(X)
        cols["f_x"][:, i] = p.f(X)
        cols["grad_sq"][:, i] = np.sum(G * G, axis=1)
        if "w" in track:
            factor = s.beta * s.eta / (1.0 - s.beta)
            W = X - factor * M
            cols["f_w"][:, i] = p.f(W)
        if "y" in track:
            V = X + (1.0 / step.theta - 1.0) * (X - Y)
            cols["f_y"][:, i] = p.f(Y)
            if "dist_v_sq" in extras:
                D = V - p.x_star
                extras["dist_v_sq"][:, i] = np.sum(D * D, axis=1)
        if "xbar" in track:
            XBAR += (X - XBAR) / k
            extras["f_xbar"][:, i] = p.f(XBAR)
        g = G + noise_scale * streams.normal(p.dim) if noise.kind == "gaussian" else G
        M_new = step.beta * M + (1.0 - step.beta) * g
        X_new = X - step.gamma * g - step.eta * M_new
        cols["m_sq"][:, i] = np.sum(M_new * M_new, axis=1)
        if "residuals" in track and isinstance(s, ConstantSchedule):
            W_next = X_new - factor * M_new
            R = W_next - W + (s.gamma + s.eta) * g
            cols["resid_w"][:, i] = np.linalg.norm(R, axis=1)
        if "y" in track:
            Y_new = X - step.gamma * g
            if "residuals" in track and not isinstance(s, ConstantSchedule):
                theta_next = float(s.theta[k + 1])
                V_next = X_new + (1.0 / theta_next - 1.0) * (X_new - Y_new)
                R = V_next - V + s.gamma_tilde(k) * g
                cols["resid_v"][:, i] = np.linalg.norm(R, axis=1)
            Y = Y_new
        X, M = X_new, M_new

    assert np.all(np.isfinite(X)), "a seed diverged; rerun with the scalar path"
    final = RunState(k=T + 1, x=X, m=M, y=Y,
                     xbar=XBAR if "xbar" in track else None)
    if "w" in track:
        final.w = X - (s.beta * s.eta / (1.0 - s.beta)) * M
    return RunResult(cols, extras, final)
