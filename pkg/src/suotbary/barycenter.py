"""Robust barycenter algorithms on the SPD manifold.

Two convergent schemes minimize the averaged relaxed transport cost over
the barycenter covariance: an exact geodesic gradient descent using the
closed-form Riemannian gradient, and a hybrid scheme alternating
closed-form relaxed-marginal solves with one fixed-point update of the
plain Wasserstein barycenter.  Stochastic single-pass variants, the
closed-form mean update, a plain Wasserstein-barycenter baseline and a
finite-difference gradient baseline round out the module.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from . import spd
from .bures import tangent_norm
from .errors import (
    BoxViolation,
    InvalidInput,
    RetractionOutOfCone,
    SingularSystem,
)
from .gaussian import GaussianMeasure, transport_map
from .suot import mean_weight_matrix, relaxed_marginal, suot_cost_centered, suot_gradient


@dataclass(frozen=True)
class BarycenterProblem:
    """Measures to average, their weights (default uniform) and tau.

    The centered optimization path uses only the covariances.
    """

    measures: Sequence[GaussianMeasure]
    tau: float
    weights: Optional[NDArray] = None

    def __post_init__(self):
        if len(self.measures) < 1:
            raise InvalidInput("need at least one measure")
        if not self.tau > 0:
            raise InvalidInput(f"tau must be positive, got {self.tau}")
        n = len(self.measures)
        w = (
            np.full(n, 1.0 / n)
            if self.weights is None
            else np.asarray(self.weights, dtype=np.float64)
        )
        if w.shape != (n,) or np.any(w < 0):
            raise InvalidInput("weights must be nonnegative, one per measure")
        if abs(float(w.sum()) - 1.0) > 1e-12:
            raise InvalidInput(f"weights sum to {w.sum()}, expected 1")
        d = self.measures[0].dim
        if any(g.dim != d for g in self.measures):
            raise InvalidInput("measures have mixed dimensions")
        object.__setattr__(self, "weights", w)

    @property
    def covs(self) -> list[NDArray]:
        return [g.cov for g in self.measures]

    @property
    def dim(self) -> int:
        return self.measures[0].dim


@dataclass(frozen=True)
class OptimConfig:
    """Step size, iteration cap, stopping tolerance and box policy.

    Stopping is on |L_{k-1} - L_k| <= tol; an optional gradient-norm
    threshold can be enabled via grad_tol.  The eigenvalue box [1/rho, rho]
    is only tracked when rho is set; `box_policy` is one of "assert"
    (raise), "warn" (record and warn) or "clamp" (project back).
    """

    eta: float = 0.1
    max_iters: int = 500
    tol: float = 1e-8
    rho: Optional[float] = None
    box_policy: str = "warn"
    mode: str = "deterministic"
    grad_tol: Optional[float] = None
    momentum: float = 0.0

    def __post_init__(self):
        if not self.eta > 0:
            raise InvalidInput(f"step size must be positive, got {self.eta}")
        if self.max_iters < 1:
            raise InvalidInput("max_iters must be >= 1")
        if not self.tol > 0:
            raise InvalidInput("tol must be positive")
        if self.rho is not None and not self.rho > 1:
            raise InvalidInput(f"rho must be > 1, got {self.rho}")
        if self.box_policy not in ("assert", "warn", "clamp"):
            raise InvalidInput(f"unknown box_policy {self.box_policy!r}")
        if self.mode not in ("deterministic", "stochastic"):
            raise InvalidInput(f"unknown mode {self.mode!r}")


def exact_step_config(cfg: OptimConfig) -> None:
    """The exact method's rate factor eta(1 - eta/2) must stay positive."""
    if not cfg.eta < 2:
        raise InvalidInput(f"exact method requires eta in (0, 2), got {cfg.eta}")


@dataclass(frozen=True)
class TraceRecord:
    k: int
    loss: float
    grad_norm: float
    in_box: bool
    ms: float


@dataclass
class RunTrace:
    """Per-iteration optimizer records plus the final status."""

    records: list[TraceRecord] = field(default_factory=list)
    status: str = "MaxIters"  # Converged | MaxIters | StepRejected

    @property
    def losses(self) -> NDArray:
        return np.array([r.loss for r in self.records])

    def rows(self) -> list[tuple]:
        return [(r.k, r.loss, r.grad_norm, int(r.in_box), r.ms) for r in self.records]


IterationCallback = Callable[[TraceRecord, NDArray], None]


def objective(problem: BarycenterProblem, sigma_b: NDArray) -> float:
    """Weighted relaxed-transport cost of the candidate barycenter.

    Summation runs in measure index order so results are bit-stable.
    """
    sigma_b = spd.check_spd(sigma_b)
    total = 0.0
    for w, cov in zip(problem.weights, problem.covs):
        total += w * suot_cost_centered(cov, sigma_b, problem.tau)
    return total


def _weighted_gradient(problem: BarycenterProblem, sigma_b: NDArray) -> NDArray:
    g = np.zeros_like(sigma_b)
    for w, cov in zip(problem.weights, problem.covs):
        g += w * suot_gradient(cov, sigma_b, problem.tau)
    return spd.symmetrize(g)


def _handle_box(sigma, cfg: OptimConfig, trace_flag: list) -> NDArray:
    if cfg.rho is None:
        trace_flag.append(True)
        return sigma
    inside = spd.in_box(sigma, cfg.rho)
    if inside:
        trace_flag.append(True)
        return sigma
    if cfg.box_policy == "assert":
        raise BoxViolation(f"iterate left the eigenvalue box [1/{cfg.rho}, {cfg.rho}]")
    if cfg.box_policy == "clamp":
        trace_flag.append(True)
        return spd.clamp_to_box(sigma, cfg.rho)
    warnings.warn("iterate left the eigenvalue box", stacklevel=3)
    trace_flag.append(False)
    return sigma


def _retract(sigma: NDArray, g: NDArray, eta: float) -> NDArray:
    """One geodesic step Exp_sigma(-eta * g); halves eta once on cone exit."""
    d = sigma.shape[0]
    for attempt, step in enumerate((eta, eta / 2)):
        m = np.eye(d) - step * g
        if np.linalg.eigvalsh((m + m.T) / 2)[0] > spd.EIG_FLOOR:
            if attempt == 1:
                warnings.warn("step halved once to stay in the SPD cone", stacklevel=3)
            return spd.symmetrize(m @ sigma @ m)
    raise RetractionOutOfCone(
        f"Id - eta*G leaves the cone even after halving eta={eta}"
    )


def _descend(
    problem: BarycenterProblem,
    config: OptimConfig,
    init: NDArray,
    step_fn: Callable[[NDArray], NDArray],
    on_iteration: Optional[IterationCallback],
) -> tuple[NDArray, RunTrace]:
    """Shared deterministic loop: step, trace, stop on |dL| <= tol."""
    sigma = spd.check_spd(init)
    if config.rho is not None and config.box_policy == "assert":
        if not spd.in_box(sigma, config.rho):
            raise BoxViolation("initial point outside the eigenvalue box")
    trace = RunTrace()
    t0 = time.perf_counter()

    def record(k: int, sigma_k: NDArray, loss: float) -> TraceRecord:
        gnorm = tangent_norm(sigma_k, _weighted_gradient(problem, sigma_k))
        flag = [True]
        if config.rho is not None:
            flag = [spd.in_box(sigma_k, config.rho)]
        rec = TraceRecord(
            k, loss, gnorm, flag[0], (time.perf_counter() - t0) * 1000.0
        )
        trace.records.append(rec)
        if on_iteration is not None:
            on_iteration(rec, sigma_k)
        return rec

    loss = objective(problem, sigma)
    record(0, sigma, loss)
    for k in range(1, config.max_iters + 1):
        try:
            candidate = step_fn(sigma)
        except RetractionOutOfCone as exc:
            trace.status = "StepRejected"
            exc.trace = trace  # partial trace for callers that persist it
            raise
        flag: list = []
        candidate = _handle_box(candidate, config, flag)
        new_loss = objective(problem, candidate)
        sigma = candidate
        rec = record(k, sigma, new_loss)
        if abs(loss - new_loss) <= config.tol:
            trace.status = "Converged"
            loss = new_loss
            break
        if config.grad_tol is not None and rec.grad_norm <= config.grad_tol:
            trace.status = "Converged"
            loss = new_loss
            break
        loss = new_loss
    return sigma, trace


def exact_geodesic_gd(
    problem: BarycenterProblem,
    config: OptimConfig,
    init: NDArray,
    on_iteration: Optional[IterationCallback] = None,
) -> tuple[NDArray, RunTrace]:
    """Geodesic gradient descent with the closed-form Riemannian gradient.

    Update: sigma <- (Id - eta G) sigma (Id - eta G) with G the weighted sum
    of per-measure gradients, i.e. Exp_sigma(-eta * grad).
    """
    exact_step_config(config)

    def step(sigma: NDArray) -> NDArray:
        g = _weighted_gradient(problem, sigma)
        return _retract(sigma, g, config.eta)

    return _descend(problem, config, init, step, on_iteration)


def hybrid_gd(
    problem: BarycenterProblem,
    config: OptimConfig,
    init: NDArray,
    on_iteration: Optional[IterationCallback] = None,
) -> tuple[NDArray, RunTrace]:
    """Alternating scheme: closed-form relaxed marginals, then one
    Wasserstein-barycenter fixed-point update.

    Per iteration: sigma_x_i = relaxed_marginal(cov_i, sigma, tau) for each
    measure; S = sum_i w_i T_{sigma -> sigma_x_i}; sigma <- S sigma S.  At a
    fixed point S = Id.
    """

    def step(sigma: NDArray) -> NDArray:
        d = sigma.shape[0]
        s = np.zeros((d, d))
        for w, cov in zip(problem.weights, problem.covs):
            sx = relaxed_marginal(cov, sigma, problem.tau)
            s += w * transport_map(sigma, sx)
        s = spd.symmetrize(s)
        return spd.symmetrize(s @ sigma @ s)

    return _descend(problem, config, init, step, on_iteration)


def _sgd_pass(
    problem: BarycenterProblem,
    config: OptimConfig,
    init: NDArray,
    seed: int,
    one_measure_step: Callable[[NDArray, NDArray], NDArray],
    on_iteration: Optional[IterationCallback],
) -> tuple[NDArray, RunTrace]:
    if config.mode != "stochastic":
        raise InvalidInput("stochastic variants require mode='stochastic'")
    sigma = spd.check_spd(init)
    order = np.random.default_rng(seed).permutation(len(problem.measures))
    trace = RunTrace()
    t0 = time.perf_counter()

    def record(k: int, sigma_k: NDArray) -> None:
        loss = objective(problem, sigma_k)
        gnorm = tangent_norm(sigma_k, _weighted_gradient(problem, sigma_k))
        inside = True if config.rho is None else spd.in_box(sigma_k, config.rho)
        rec = TraceRecord(k, loss, gnorm, inside, (time.perf_counter() - t0) * 1000.0)
        trace.records.append(rec)
        if on_iteration is not None:
            on_iteration(rec, sigma_k)

    record(0, sigma)
    for k, idx in enumerate(order, start=1):
        sigma = one_measure_step(sigma, problem.covs[int(idx)])
        flag: list = []
        sigma = _handle_box(sigma, config, flag)
        record(k, sigma)
    # a single pass always runs its full budget of n steps
    trace.status = "MaxIters"
    return sigma, trace


def exact_sgd(
    problem: BarycenterProblem,
    config: OptimConfig,
    init: NDArray,
    seed: int,
    on_iteration: Optional[IterationCallback] = None,
) -> tuple[NDArray, RunTrace]:
    """Single seeded pass of per-measure geodesic gradient steps."""
    exact_step_config(config)

    def one(sigma: NDArray, cov: NDArray) -> NDArray:
        g = suot_gradient(cov, sigma, problem.tau)
        return _retract(sigma, g, config.eta)

    return _sgd_pass(problem, config, init, seed, one, on_iteration)


def hybrid_sgd(
    problem: BarycenterProblem,
    config: OptimConfig,
    init: NDArray,
    seed: int,
    on_iteration: Optional[IterationCallback] = None,
) -> tuple[NDArray, RunTrace]:
    """Single seeded pass of per-measure hybrid fixed-point steps."""

    def one(sigma: NDArray, cov: NDArray) -> NDArray:
        sx = relaxed_marginal(cov, sigma, problem.tau)
        t = transport_map(sigma, sx)
        return spd.symmetrize(t @ sigma @ t)

    return _sgd_pass(problem, config, init, seed, one, on_iteration)


def mean_barycenter(
    means: Sequence[NDArray],
    covs: Sequence[NDArray],
    tau: float,
    weights: Optional[NDArray] = None,
) -> NDArray:
    """Closed-form barycenter mean: b = (sum w_i M_i)^{-1} sum w_i M_i a_i.

    M_i is the mean-part quadratic form of measure i.  The mean subproblem
    is an unconstrained quadratic independent of the covariance iteration,
    so it is solved once.  Raises :class:`SingularSystem` when the weight
    matrix sum is numerically singular (it degenerates as tau -> 0).
    """
    n = len(means)
    if n < 1 or len(covs) != n:
        raise InvalidInput("means and covs must be equal-length and nonempty")
    w = np.full(n, 1.0 / n) if weights is None else np.asarray(weights, np.float64)
    d = np.asarray(means[0]).size
    total = np.zeros((d, d))
    rhs = np.zeros(d)
    for wi, a, cov in zip(w, means, covs):
        m = mean_weight_matrix(cov, tau)
        total += wi * m
        rhs += wi * (m @ np.asarray(a, dtype=np.float64).ravel())
    if np.linalg.eigvalsh(spd.symmetrize(total))[0] < spd.EIG_FLOOR:
        raise SingularSystem("summed mean weight matrix is numerically singular")
    return np.linalg.solve(total, rhs)


def wasserstein_barycenter(
    covs: Sequence[NDArray],
    weights: Optional[NDArray] = None,
    config: Optional[OptimConfig] = None,
) -> NDArray:
    """Plain Wasserstein barycenter of centered Gaussians (baseline).

    Standard fixed-point iteration: S = sum_i w_i T_{sigma -> cov_i},
    sigma <- S sigma S, started from the weighted arithmetic mean.
    """
    cfg = config or OptimConfig(tol=1e-12, max_iters=500)
    n = len(covs)
    if n < 1:
        raise InvalidInput("need at least one covariance")
    w = np.full(n, 1.0 / n) if weights is None else np.asarray(weights, np.float64)
    covs = [spd.check_spd(c) for c in covs]
    if n == 1:
        return covs[0]
    d = covs[0].shape[0]
    sigma = spd.symmetrize(sum(wi * c for wi, c in zip(w, covs)))
    for _ in range(cfg.max_iters):
        s = np.zeros((d, d))
        for wi, c in zip(w, covs):
            s += wi * transport_map(sigma, c)
        s = spd.symmetrize(s)
        sigma = spd.symmetrize(s @ sigma @ s)
        if spd.frobenius(s - np.eye(d)) <= cfg.tol:
            break
    return sigma


def _fd_euclidean_gradient(
    problem: BarycenterProblem, sigma: NDArray, h: float = 1e-6
) -> NDArray:
    """Central differences of the objective over the symmetric entry basis."""
    d = sigma.shape[0]
    g = np.zeros((d, d))
    for i in range(d):
        for j in range(i + 1):
            e = np.zeros((d, d))
            e[i, j] = e[j, i] = 1.0
            fp = objective(problem, spd.symmetrize(sigma + h * e))
            fm = objective(problem, spd.symmetrize(sigma - h * e))
            # entry derivative of the symmetric parameterization; off-diagonal
            # perturbations move two entries at once
            val = (fp - fm) / (2 * h)
            g[i, j] = g[j, i] = val if i == j else val / 2
    return g


def numeric_gd_baseline(
    problem: BarycenterProblem,
    config: OptimConfig,
    init: NDArray,
    on_iteration: Optional[IterationCallback] = None,
) -> tuple[NDArray, RunTrace]:
    """Ablation baseline: finite-difference Euclidean gradient, converted to
    an approximate manifold gradient as 2 (grad Sigma + (grad Sigma)^T),
    with optional heavy-ball momentum."""
    state = {"prev": None}

    def step(sigma: NDArray) -> NDArray:
        egrad = _fd_euclidean_gradient(problem, sigma)
        g = 2 * spd.symmetrize(egrad @ sigma + (egrad @ sigma).T)
        if config.momentum > 0 and state["prev"] is not None:
            g = g + config.momentum * state["prev"]
        state["prev"] = g
        return _retract(sigma, g, config.eta)

    return _descend(problem, config, init, step, on_iteration)


def implied_euclidean_gradient(problem: BarycenterProblem, sigma: NDArray) -> NDArray:
    """Euclidean gradient implied by the closed-form Riemannian gradient.

    Solves the Lyapunov relation linking the two gradient representations:
    X Sigma + Sigma X = (G Sigma + Sigma G) / 2 for X, where G is the
    closed-form manifold gradient.  Used as a consistency probe against
    the finite-difference Euclidean gradient.
    """
    g = _weighted_gradient(problem, sigma)
    a = (g @ sigma + sigma @ g) / 2
    return spd.lyapunov_solve(sigma, a)
