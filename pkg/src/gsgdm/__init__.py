"""Generalized stochastic gradient descent with momentum.

One two-parameter update
    m_k = beta_k m_{k-1} + (1 - beta_k) g_k
    x_{k+1} = x_k - gamma_k g_k - eta_k m_k
covers SGD, heavy ball, Nesterov momentum, synthesized/quasi-hyperbolic
momentum, and MASS exactly, and admits a time-varying schedule with the
accelerated O(1/t^2) rate. The package provides the stepper, the parameter
maps, schedule builders and admissibility validators, certificate-function
tracking, guarantee right-hand sides, trace verification, and a CLI
harness that writes one CSV per run.
"""

from .core import (
    RngStream, RngStreams, RunState, ScheduleStep, TRACE_COLUMNS,
    mean_traces, read_trace, write_trace,
)
from .problems import (
    GradientSample, Noise, ProblemSpec, estimate_L, estimate_mu,
    load_dataset, logistic, pl_sine, quadratic, sample_gradient,
    synth_logistic,
)
from .schedules import (
    AcceleratedSchedule, ConstantSchedule, TimeVaryingSchedule,
    ValidationReport, auto_gamma, build_accelerated, nag_classic,
    parse_schedule, validate_convex_constant, validate_nonconvex_constant,
    validate_timevarying,
)
from .engine import (
    EngineConfig, RunResult, gsgdm_step, run, run_many, update_v_y, update_w,
)
from .analysis import (
    PhiTracker, VarphiTracker, VerifyReport, bound_rhs, bound_series,
    mbound, mbound_series, phi, pl_constants, theta_products, varphi,
    verify_trace,
)
from .variants import (
    METHODS, VariantState, init_variant, map_to_gsgdm,
    schedule_matches_method, twin_run, variant_step,
)

__version__ = "0.1.0"

__all__ = [
    "RngStream", "RngStreams", "RunState", "ScheduleStep", "TRACE_COLUMNS",
    "mean_traces", "read_trace", "write_trace",
    "GradientSample", "Noise", "ProblemSpec", "estimate_L", "estimate_mu",
    "load_dataset", "logistic", "pl_sine", "quadratic", "sample_gradient",
    "synth_logistic",
    "AcceleratedSchedule", "ConstantSchedule", "TimeVaryingSchedule",
    "ValidationReport", "auto_gamma", "build_accelerated", "nag_classic",
    "parse_schedule", "validate_convex_constant",
    "validate_nonconvex_constant", "validate_timevarying",
    "EngineConfig", "RunResult", "gsgdm_step", "run", "run_many",
    "update_v_y", "update_w",
    "PhiTracker", "VarphiTracker", "VerifyReport", "bound_rhs",
    "bound_series", "mbound", "mbound_series", "phi", "pl_constants",
    "theta_products", "varphi", "verify_trace",
    "METHODS", "VariantState", "init_variant", "map_to_gsgdm",
    "schedule_matches_method", "twin_run", "variant_step",
    "__version__",
]
