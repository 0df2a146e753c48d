"""Command-line experiment harness.

Builds a problem, a method, and a schedule from flags, runs a seed sweep,
writes one trace CSV per seed plus a seed-mean CSV, and optionally verifies
the requested guarantees, printing one report line per check.

Exit codes: 0 all checks pass (or none requested), 1 a check failed,
2 a run diverged, 3 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, replace

import numpy as np

from . import analysis, engine, problems, schedules, variants
from .core import RngStream, mean_traces, write_trace
from .engine import EngineConfig
from .problems import Noise
from .schedules import ConstantSchedule

METHOD_CHOICES = ("sgd", "hb", "nag", "nag-classic", "sum", "qhm", "mass", "gsgdm")
CHECK_CHOICES = ("thm-cvx-const", "thm-cvx-deter", "thm-accel-det",
                 "thm-accel-stoch", "thm-nc", "thm-pl")
CONSTANT_CHECKS = ("thm-cvx-const", "thm-cvx-deter", "thm-nc", "thm-pl")
FSTAR_REFERENCE_ITERS = 10 ** 6


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; 2 is reserved for divergence
    def error(self, message):
        raise UsageError(message)


@dataclass
class ExperimentPlan:
    problem: str
    method: str
    schedule: str
    sigma: float = 0.0
    batch: int | None = None
    horizon: int = 1000
    seeds: int = 1
    seed: int = 42
    out_dir: str = "."
    checks: tuple = ()
    C: float | None = None
    fstar_iters: int = FSTAR_REFERENCE_ITERS

    def __post_init__(self):
        assert self.seeds >= 1 and self.horizon >= 1
        assert self.sigma >= 0.0


def build_parser():
    ap = _Parser(prog="gsgdm-bench", description=__doc__)
    ap.add_argument("--problem", required=True,
                    help="quad:l1,l2,... | logistic:file=PATH | logistic:synth=N,D | plsine")
    ap.add_argument("--method", required=True, choices=METHOD_CHOICES)
    ap.add_argument("--schedule", required=True,
                    help="const:beta=B,gamma=G,eta=E | accel:gamma=G|auto[,beta1=B][,C=C] | nag-classic:gamma=G")
    ap.add_argument("--sigma", type=float, default=0.0,
                    help="additive gradient noise level (E||eps||^2 = sigma^2)")
    ap.add_argument("--batch", type=int, default=None,
                    help="mini-batch size (logistic only; default full batch)")
    ap.add_argument("--iters", type=int, default=1000)
    ap.add_argument("--seeds", type=int, default=1, help="number of independent runs")
    ap.add_argument("--seed", type=int, default=42, help="base seed; run i uses seed XOR i")
    ap.add_argument("--out", default=".", help="output directory for CSVs")
    ap.add_argument("--check", nargs="*", default=[], choices=CHECK_CHOICES,
                    metavar="THEOREM", help="guarantees to verify: %s" % ", ".join(CHECK_CHOICES))
    ap.add_argument("--C", type=float, default=None,
                    help="tuning constant for gamma=auto and the tuned stochastic bound")
    ap.add_argument("--fstar-iters", type=int, default=FSTAR_REFERENCE_ITERS,
                    help=argparse.SUPPRESS)
    return ap


def _parse_problem_descriptor(text):
    """Validate the --problem grammar; returns (kind, payload)."""
    head, _, body = text.partition(":")
    if head == "quad":
        try:
            lams = [float(v) for v in body.split(",")] if body else []
        except ValueError:
            raise UsageError("quad: curvatures must be numbers, got %r" % body)
        if not lams or any(l <= 0 for l in lams):
            raise UsageError("quad: needs positive curvatures, e.g. quad:1,4")
        return "quad", lams
    if head == "logistic":
        if body.startswith("file="):
            path = body[len("file="):]
            if not path:
                raise UsageError("logistic:file= needs a path")
            return "logistic-file", path
        if body.startswith("synth="):
            parts = body[len("synth="):].split(",")
            try:
                n, d = (int(v) for v in parts)
            except ValueError:
                raise UsageError("logistic:synth= needs N,D, e.g. logistic:synth=200,20")
            if n < 1 or d < 1:
                raise UsageError("logistic:synth= needs positive N,D")
            return "logistic-synth", (n, d)
        raise UsageError("logistic: expected file=PATH or synth=N,D")
    if head == "plsine":
        if body:
            raise UsageError("plsine takes no parameters")
        return "plsine", None
    raise UsageError("unknown problem %r" % text)


def _validate_plan(plan):
    kind, _ = _parse_problem_descriptor(plan.problem)
    if plan.C is not None and plan.C <= 0.0:
        raise UsageError("--C must be positive")

    head, _, body = plan.schedule.partition(":")
    if head == "const":
        try:
            kv = schedules._parse_kv(body, {"beta", "gamma", "eta"})
            missing = {"beta", "gamma", "eta"} - set(kv)
            if missing:
                raise ValueError("const schedule needs %s" % ", ".join(sorted(missing)))
            sched = ConstantSchedule(float(kv["beta"]), float(kv["gamma"]), float(kv["eta"]))
            variants.schedule_matches_method(plan.method, sched)
        except (ValueError, AssertionError) as exc:
            raise UsageError(str(exc) or "invalid constant schedule")
    elif head == "accel":
        if plan.method != "gsgdm":
            raise UsageError("accel schedules run as --method gsgdm")
        try:
            kv = schedules._parse_kv(body, {"gamma", "beta1", "C"})
        except ValueError as exc:
            raise UsageError(str(exc))
        if "gamma" not in kv:
            raise UsageError("accel schedule needs gamma")
        if kv["gamma"] == "auto":
            has_C = "C" in kv or plan.C is not None
            if not (plan.sigma > 0.0 and has_C):
                raise UsageError("gamma=auto needs --sigma > 0 and a C constant")
    elif head == "nag-classic":
        if plan.method not in ("nag-classic", "gsgdm"):
            raise UsageError("nag-classic schedules run as --method nag-classic")
        try:
            kv = schedules._parse_kv(body, {"gamma"})
        except ValueError as exc:
            raise UsageError(str(exc))
        if "gamma" not in kv or float(kv["gamma"]) <= 0.0:
            raise UsageError("nag-classic schedule needs gamma > 0")
    else:
        raise UsageError("unknown schedule family %r" % head)
    if plan.method == "nag-classic" and head != "nag-classic":
        raise UsageError("method nag-classic needs schedule nag-classic:gamma=...")

    if plan.batch is not None:
        if not kind.startswith("logistic"):
            raise UsageError("--batch needs a logistic problem")
        if plan.batch < 1:
            raise UsageError("--batch must be >= 1")
        if plan.sigma > 0.0:
            raise UsageError("--batch and --sigma are mutually exclusive noise models")

    for check in plan.checks:
        if check in CONSTANT_CHECKS and head != "const":
            raise UsageError("%s applies to constant schedules" % check)
        if check in ("thm-accel-det", "thm-accel-stoch") and head == "const":
            raise UsageError("%s needs a time-varying schedule" % check)
        if check == "thm-accel-stoch":
            if not plan.sigma > 0.0:
                raise UsageError("thm-accel-stoch is a noisy-regime bound; needs --sigma > 0")
            if plan.C is None and "C=" not in body:
                raise UsageError("thm-accel-stoch needs the tuning constant C")
        if check == "thm-pl" and kind.startswith("logistic"):
            raise UsageError("thm-pl needs a problem with a known dominance constant (quad or plsine)")


def parse_args(argv):
    ns = build_parser().parse_args(argv)
    plan = ExperimentPlan(
        problem=ns.problem, method=ns.method, schedule=ns.schedule,
        sigma=ns.sigma, batch=ns.batch, horizon=ns.iters, seeds=ns.seeds,
        seed=ns.seed, out_dir=ns.out, checks=tuple(ns.check), C=ns.C,
        fstar_iters=ns.fstar_iters,
    )
    _validate_plan(plan)
    return plan


def _build_problem(plan, run0_stream):
    """Instantiate the problem; synthetic data consumes run-0 stream words
    before x1 is drawn, so the whole experiment is a pure function of the
    base seed."""
    kind, payload = _parse_problem_descriptor(plan.problem)
    if kind == "quad":
        return problems.quadratic(np.asarray(payload))
    if kind == "logistic-file":
        A, b = problems.load_dataset(payload)
        return problems.logistic(A, b)
    if kind == "logistic-synth":
        n, d = payload
        A, b = problems.synth_logistic(n, d, run0_stream)
        return problems.logistic(A, b)
    if kind == "plsine":
        return problems.pl_sine()
    raise AssertionError(kind)


def _resolve_f_star(problem, plan):
    """Fill in f_star (and x_star) for problems that do not know theirs.

    A long accelerated reference run from the origin produces the estimate,
    cached in out_dir as fstar.txt / xstar.txt and reused afterwards.
    """
    if problem.f_star is not None:
        return problem
    fstar_path = os.path.join(plan.out_dir, "fstar.txt")
    xstar_path = os.path.join(plan.out_dir, "xstar.txt")
    if os.path.exists(fstar_path):
        with open(fstar_path) as fh:
            f_star = float(fh.read().strip())
        x_star = None
        if os.path.exists(xstar_path):
            x_star = np.atleast_1d(np.loadtxt(xstar_path, dtype=float))
            assert x_star.shape == (problem.dim,), "cached xstar has wrong dimension"
        return replace(problem, f_star=f_star, x_star=x_star)
    iters = int(plan.fstar_iters)
    sched = schedules.build_accelerated(problem.L, iters, gamma=1.0 / problem.L)
    res = engine.run(EngineConfig(
        problem=problem, schedule=sched, horizon=iters,
        x1=np.zeros(problem.dim), track=frozenset({"y"})))
    assert not res.diverged, "reference run diverged; cannot estimate f*"
    f_star = min(float(res.columns["f_x"].min()),
                 float(res.columns["f_y"].min()),
                 float(problem.f(res.final.x)))
    x_star = np.asarray(res.final.x, dtype=float)
    with open(fstar_path, "w") as fh:
        fh.write("%.17g\n" % f_star)
    np.savetxt(xstar_path, x_star, fmt="%.17g")
    return replace(problem, f_star=f_star, x_star=x_star)


_VALIDATORS = {
    "thm-cvx-const": lambda s, L: schedules.validate_convex_constant(s, L),
    "thm-cvx-deter": lambda s, L: schedules.validate_convex_constant(s, L, deterministic=True),
    "thm-nc": lambda s, L: schedules.validate_nonconvex_constant(s, L),
    "thm-pl": lambda s, L: schedules.validate_nonconvex_constant(s, L, pl=True),
    "thm-accel-det": lambda s, L: schedules.validate_timevarying(s, L),
    "thm-accel-stoch": lambda s, L: schedules.validate_timevarying(s, L),
}


def run_experiment(plan):
    os.makedirs(plan.out_dir, exist_ok=True)
    run0 = RngStream(plan.seed)
    problem = _build_problem(plan, run0)
    x1 = run0.normal(problem.dim)

    text = plan.schedule
    head, _, body = text.partition(":")
    if head == "accel" and plan.C is not None and "C=" not in body:
        text += ("," if body else "") + "C=%.17g" % plan.C
    try:
        schedule = schedules.parse_schedule(text, L=problem.L, horizon=plan.horizon,
                                            sigma=plan.sigma)
        variants.schedule_matches_method(plan.method, schedule)
    except ValueError as exc:
        raise UsageError(str(exc))

    needs_f_star = bool(plan.checks)
    if needs_f_star:
        problem = _resolve_f_star(problem, plan)

    if plan.batch is not None:
        noise = Noise(kind="minibatch", batch=plan.batch)
    elif plan.sigma > 0.0:
        noise = Noise(kind="gaussian", sigma=plan.sigma)
    else:
        noise = Noise()

    if isinstance(schedule, ConstantSchedule):
        track = {"w", "residuals", "xbar"}
        if "thm-pl" in plan.checks and problem.mu is not None and problem.f_star is not None:
            track.add("varphi")
    else:
        track = {"v", "y", "residuals", "xbar"}
        if problem.f_star is not None and problem.x_star is not None:
            track.add("phi")

    C_val = plan.C
    if head == "accel" and "C=" in body:
        C_val = float(schedules._parse_kv(body, {"gamma", "beta1", "C"})["C"])
    base_inputs = {
        "schedule": schedule, "sigma": plan.sigma, "L": problem.L,
        "mu": problem.mu, "f_star": problem.f_star, "C": C_val,
    }
    if problem.x_star is not None:
        diff = x1 - problem.x_star
        base_inputs["dist1_sq"] = float(diff @ diff)

    bound_arr = None
    if plan.checks:
        # the bound column records the first requested check's right-hand side
        inputs0 = dict(base_inputs)
        inputs0["gap1"] = float(problem.f(x1)) - problem.f_star
        g1 = problem.grad(x1)
        inputs0["grad1_sq"] = float(g1 @ g1)
        if plan.checks[0] == "thm-accel-stoch":
            inputs0["t"] = plan.horizon
        try:
            bound_arr = np.asarray(analysis.bound_series(
                plan.checks[0], np.arange(1, plan.horizon + 1), inputs0), dtype=float)
            track.add("bounds")
        except KeyError:
            bound_arr = None

    results = []
    for i in range(plan.seeds):
        stream = run0 if i == 0 else RngStream(plan.seed ^ i)
        cfg = EngineConfig(
            problem=problem, schedule=schedule, noise=noise, horizon=plan.horizon,
            stream=stream, x1=x1, track=frozenset(track), bound=bound_arr)
        results.append(engine.run(cfg))

    paths = []
    for i, res in enumerate(results):
        path = os.path.join(plan.out_dir, "%s_%d.csv" % (plan.method, plan.seed ^ i))
        write_trace(path, res.columns)
        paths.append(path)
    diverged = [i for i, res in enumerate(results) if res.diverged]
    if diverged:
        for i in diverged:
            print("divergence: run %d (seed %d) at step %d" %
                  (i, plan.seed ^ i, results[i].divergence_step), file=sys.stderr)
        return 2
    mean_path = os.path.join(plan.out_dir, "%s_mean.csv" % plan.method)
    write_trace(mean_path, mean_traces([res.columns for res in results]))
    paths.append(mean_path)
    for path in paths:
        print("wrote %s" % path, file=sys.stderr)

    if not plan.checks:
        return 0
    traces = [res.merged() for res in results]
    all_pass = True
    for check in plan.checks:
        vrep = _VALIDATORS[check](schedule, problem.L)
        if not vrep.passed:
            print("note: %s parameter conditions unmet:\n%s"
                  % (check, vrep.describe()), file=sys.stderr)
        inputs = dict(base_inputs)
        if check == "thm-accel-stoch":
            inputs["t"] = plan.horizon
        if check == "thm-pl":
            gaps = [float(problem.f(engine.update_w(res.final, schedule))) - problem.f_star
                    for res in results]
            inputs["final_w_gap"] = np.asarray(gaps)
        report = analysis.verify_trace(traces, check, inputs)
        print(report.line())
        all_pass = all_pass and report.passed
    return 0 if all_pass else 1


def main(argv=None):
    try:
        plan = parse_args(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 3
    try:
        return run_experiment(plan)
    except UsageError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 3
    except OSError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
