"""Test objectives and stochastic gradient oracles.

Three families: a diagonal quadratic (strongly convex, closed-form optimum),
binary logistic regression (convex, smoothness constant from data), and a 1-d
nonconvex function x^2 + 3 sin^2(x) that satisfies a PL inequality. Each is
packaged with its smoothness constant and whatever optimum information is
known exactly; unknown fields stay None and downstream code must not guess.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .core import RngStream


@dataclass(frozen=True)
class ProblemSpec:
    """An objective with gradient and curvature metadata.

    f and grad broadcast over leading axes: x of shape (..., dim) gives
    f(x) of shape (...) and grad(x) of shape (..., dim). sample_grad, when
    present, maps (x, indices) to a mini-batch gradient and enables
    subsampling noise.
    """

    kind: str
    dim: int
    f: Callable
    grad: Callable
    L: float
    mu: float | None = None
    f_star: float | None = None
    x_star: np.ndarray | None = None
    sample_grad: Callable | None = None
    data: tuple | None = None
    name: str = ""


def quadratic(lambdas):
    """0.5 * sum_i lambda_i x_i^2 with all lambda_i > 0."""
    lam = np.asarray(lambdas, dtype=float)
    assert lam.ndim == 1 and lam.size >= 1
    assert np.all(lam > 0), "curvatures must be positive"
    d = lam.size

    def f(x):
        x = np.asarray(x, dtype=float)
        return 0.5 * np.sum(lam * x * x, axis=-1)

    def grad(x):
        x = np.asarray(x, dtype=float)
        return lam * x

    return ProblemSpec(
        kind="quadratic", dim=d, f=f, grad=grad,
        L=float(lam.max()), mu=float(lam.min()),
        f_star=0.0, x_star=np.zeros(d), data=(lam,),
        name="quad:" + ",".join("%g" % v for v in lam),
    )


def _sigmoid(t):
    # 0.5 * (1 + tanh(t / 2)) equals the logistic function and never overflows
    return 0.5 * (1.0 + np.tanh(0.5 * t))


def logistic(A, b, name="logistic"):
    """Mean logistic loss (1/n) sum_i log(1 + exp(-b_i <a_i, x>)).

    Labels must be exactly +-1; see load_dataset for the 0 -> -1 mapping of
    exported {0,1} datasets. The smoothness constant is lambda_max(A^T A) /
    (4 n), computed by power iteration.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    assert A.ndim == 2 and A.shape[0] >= 1
    assert b.shape == (A.shape[0],)
    assert np.all(np.isfinite(A)) and np.all(np.isfinite(b))
    assert np.all(np.abs(b) == 1.0), "labels must be in {-1, +1}"
    n, d = A.shape

    def f(x):
        x = np.asarray(x, dtype=float)
        z = b * (x @ A.T)                       # (..., n)
        return np.mean(np.logaddexp(0.0, -z), axis=-1)

    def grad(x):
        x = np.asarray(x, dtype=float)
        z = b * (x @ A.T)
        s = _sigmoid(-z)                        # d/dz log(1+e^-z) = -sigmoid(-z)
        return -((s * b) @ A) / n

    def sample_grad(x, indices):
        idx = np.asarray(indices, dtype=int)    # keep tuples from multi-indexing
        assert idx.ndim == 1 and idx.size >= 1
        Ai = A[idx]
        bi = b[idx]
        z = bi * (x @ Ai.T)
        s = _sigmoid(-z)
        return -((s * bi) @ Ai) / idx.size

    L = estimate_L_logistic(A)
    return ProblemSpec(
        kind="logistic", dim=d, f=f, grad=grad, L=L,
        sample_grad=sample_grad, data=(A, b), name=name,
    )


def pl_sine():
    """x^2 + 3 sin^2(x): nonconvex, global minimum 0 at 0, curvature in
    [-4, 8], and a positive PL constant on the working interval."""

    def f(x):
        x = np.asarray(x, dtype=float)
        s = np.sin(x)
        return np.sum(x * x + 3.0 * s * s, axis=-1)

    def grad(x):
        x = np.asarray(x, dtype=float)
        return 2.0 * x + 3.0 * np.sin(2.0 * x)

    prob = ProblemSpec(
        kind="pl_sine", dim=1, f=f, grad=grad, L=8.0,
        f_star=0.0, x_star=np.zeros(1), name="plsine",
    )
    return replace(prob, mu=estimate_mu(prob))


def estimate_L_logistic(A, tol=1e-8, max_iter=10000):
    """lambda_max(A^T A) / (4 n) by power iteration on v -> A^T (A v).

    Deterministic start vector, relative tolerance on the eigenvalue.
    Raises if the iteration stalls or the data matrix is degenerate.
    """
    A = np.asarray(A, dtype=float)
    n, d = A.shape
    v = np.linspace(1.0, 2.0, d)                # generic deterministic start
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        u = A.T @ (A @ v)
        norm = np.linalg.norm(u)
        if norm == 0.0:
            raise ValueError("data matrix has no positive singular value")
        lam_new = float(v @ u)
        v = u / norm
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            lam = lam_new
            break
        lam = lam_new
    else:
        raise ValueError("power iteration did not converge")
    assert lam > 0.0
    return lam / (4.0 * n)


def estimate_L(problem):
    """Smoothness constant for a known problem kind."""
    if problem.kind == "quadratic":
        return float(problem.data[0].max())
    if problem.kind == "logistic":
        return estimate_L_logistic(problem.data[0])
    if problem.kind == "pl_sine":
        return 8.0
    raise ValueError("unknown problem kind: %r" % (problem.kind,))


def estimate_mu(problem, lo=-10.0, hi=10.0, n_grid=20001):
    """Gradient-dominance constant.

    For the quadratic this is the smallest curvature, exactly. For 1-d
    problems with known optimal value it is the grid minimum of
    |f'(x)|^2 / (2 (f(x) - f*)) over [lo, hi], excluding points at the
    optimal level where the ratio degenerates to 0/0. The default grid
    spacing is 1e-3. Callers that feed the result into a bound should
    scale it down (e.g. by 0.95): a smaller constant only weakens the
    claimed inequality.
    """
    if problem.kind == "quadratic":
        return float(problem.data[0].min())
    assert problem.dim == 1, "grid estimate implemented for 1-d problems"
    assert problem.f_star is not None
    xs = np.linspace(lo, hi, n_grid)[:, None]
    fx = problem.f(xs) - problem.f_star
    gx = problem.grad(xs)[:, 0]
    mask = fx > 0
    assert np.any(mask)
    return float(np.min(gx[mask] ** 2 / (2.0 * fx[mask])))


def synth_logistic(n, d, stream, flip=0.1):
    """Synthetic linearly separable data with label noise.

    Rows are standard normal draws normalized to unit length, labels come
    from a planted normal direction, and each label is flipped independently
    with probability `flip`. Draw order (planted direction, then rows, then
    flip coins) is fixed so a given stream state reproduces the dataset.
    """
    assert n >= 1 and d >= 1 and 0.0 <= flip < 1.0
    assert isinstance(stream, RngStream)
    planted = stream.normal(d)
    A = np.empty((n, d))
    for i in range(n):
        row = stream.normal(d)
        norm = np.linalg.norm(row)
        assert norm > 0.0
        A[i] = row / norm
    scores = A @ planted
    b = np.where(scores >= 0.0, 1.0, -1.0)
    for i in range(n):
        if stream.uniform() < flip:
            b[i] = -b[i]
    return A, b


def load_dataset(path):
    """Read whitespace-separated rows "label f1 ... fd".

    Labels must be -1, 0, or +1; a 0 label is mapped to -1 (the common
    {0,1} export convention, remapped so the loss stays non-degenerate).
    Every row must have the same number of features.
    """
    rows = []
    labels = []
    with open(path) as fh:
        for line_no, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            vals = [float(p) for p in parts]
            lab = vals[0]
            if lab == 0.0:
                lab = -1.0
            if lab not in (-1.0, 1.0):
                raise ValueError("line %d: label %r not in {-1, 0, +1}" % (line_no, vals[0]))
            if rows and len(vals) - 1 != len(rows[0]):
                raise ValueError("line %d: inconsistent feature count" % line_no)
            if len(vals) == 1:
                raise ValueError("line %d: no features" % line_no)
            labels.append(lab)
            rows.append(vals[1:])
    if not rows:
        raise ValueError("dataset %r is empty" % (path,))
    return np.asarray(rows), np.asarray(labels)


@dataclass(frozen=True)
class Noise:
    """Gradient oracle configuration.

    kind "none": exact gradients. kind "gaussian": g = grad + eps with
    eps = (sigma / sqrt(d)) z, z standard normal, so E ||eps||^2 = sigma^2
    exactly in every dimension. kind "minibatch": mean gradient over `batch`
    indices sampled with replacement; requires a problem with per-sample
    structure.
    """

    kind: str = "none"
    sigma: float = 0.0
    batch: int | None = None

    def __post_init__(self):
        assert self.kind in ("none", "gaussian", "minibatch")
        if self.kind == "gaussian":
            assert self.sigma > 0.0
        else:
            assert self.sigma == 0.0
        if self.kind == "minibatch":
            assert self.batch is not None and self.batch >= 1
        else:
            assert self.batch is None


@dataclass(frozen=True)
class GradientSample:
    """One stochastic gradient with its provenance: the additive noise draw
    or the mini-batch indices, whichever produced it."""

    g: np.ndarray
    exact: np.ndarray | None = None
    eps: np.ndarray | None = None
    indices: tuple | None = None


def sample_gradient(problem, noise, x, stream, exact=None):
    """Draw one gradient estimate at x, consuming stream words as needed.

    `exact` may pass in a precomputed problem.grad(x) to avoid recomputing
    it; it is ignored for mini-batch noise, where the exact gradient is not
    part of the sample.
    """
    if noise.kind == "minibatch":
        n = problem.data[0].shape[0]
        assert problem.sample_grad is not None, "problem has no per-sample structure"
        idx = tuple(stream.index(n) for _ in range(noise.batch))
        return GradientSample(g=problem.sample_grad(x, list(idx)), indices=idx)
    if exact is None:
        exact = problem.grad(x)
    if noise.kind == "none":
        return GradientSample(g=exact, exact=exact)
    eps = stream.normal(problem.dim) * (noise.sigma / np.sqrt(problem.dim))
    return GradientSample(g=exact + eps, exact=exact, eps=eps)
