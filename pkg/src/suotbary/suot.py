"""Closed-form semi-unbalanced optimal transport between Gaussians.

The relaxed problem transports a scaled Gaussian ``alpha`` onto the shape of
``beta`` while replacing alpha's marginal constraint with a KL penalty of
weight tau.  Everything below is in closed form; the only matrix machinery
needed is the spectral calculus from :mod:`suotbary.spd`.

Convention notes
----------------
Equivalent-looking groupings of these closed forms differ by constants; the
ones implemented here are pinned by two independent checks that must hold
to near machine precision (see the test suite):

* the per-unit-mass optimal value ``upsilon`` must equal
  ``w2_squared(sigma_x, sigma_b) + tau * kl(sigma_x || sigma_a)`` for
  centered unit-mass inputs (``solve_suot`` re-verifies this on every such
  call), and
* the Riemannian gradient must match central finite differences of the cost
  along manifold geodesics.

Concretely: the square-root shift is ``(Id + 2*tau*C)^{1/2}`` (never
``tau``); the trace of ``[C^{-1} Sigma_gamma]^{1/2}`` enters upsilon with
coefficient -1 after the ``tr(Sigma_gamma) - tau*d/2`` cancellation; the
mean quadratic form uses ``S^{-2}`` rather than a Frobenius-norm multiple of
the identity; and the gradient is the first-variation (envelope) form
``2(Id - T)`` with ``T`` the transport map from ``sigma_b`` to the relaxed
marginal ``sigma_x``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from . import spd
from .errors import DeltaTooLarge, InvalidInput, NonFinite
from .gaussian import GaussianMeasure, kl_divergence_cov, w2_squared_cov

#: exp(-u) saturates to 0 (cost to tau * m_alpha) beyond this exponent.
EXP_SATURATION = 700.0

#: Tolerance of the internal upsilon vs cost cross-check in solve_suot.
_CONSISTENCY_RTOL = 1e-8


@dataclass(frozen=True)
class SuotParams:
    """Relaxation strength tau (> 0) and entropic weight delta (>= 0)."""

    tau: float
    delta: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.tau) and self.tau > 0):
            raise InvalidInput(f"tau must be a positive real, got {self.tau}")
        if not (np.isfinite(self.delta) and self.delta >= 0):
            raise InvalidInput(f"delta must be nonnegative, got {self.delta}")


@dataclass(frozen=True)
class SuotPlan:
    """Optimizer components of the relaxed transport problem.

    ``k_xb`` is the diagonal matrix of singular values of
    ``sigma_b^{1/2} sigma_x^{1/2}`` in descending order (the cross block in
    the aligned eigenbasis).  Use :func:`cross_covariance` for the
    ambient-basis block.  ``saturated`` flags an overflow in
    ``exp(-upsilon/tau)``, in which case ``m_pi = 0`` and the cost saturates
    at ``tau * m_alpha``.
    """

    a_x: NDArray = field(repr=False)
    sigma_x: NDArray = field(repr=False)
    k_xb: NDArray = field(repr=False)
    m_pi: float
    upsilon: float
    cost: float
    saturated: bool = False


def sigma_alpha_tau(sigma_a: NDArray, tau: float) -> NDArray:
    """Relaxation operator Id + (tau/2) * sigma_a^{-1}; SPD with spectrum > 1."""
    if not tau > 0:
        raise InvalidInput(f"tau must be positive, got {tau}")
    sigma_a = spd.check_spd(sigma_a)
    d = sigma_a.shape[0]
    return spd.symmetrize(np.eye(d) + (tau / 2) * spd.inv_spd(sigma_a))


def mean_weight_matrix(sigma_a: NDArray, tau: float) -> NDArray:
    """Quadratic form of the mean part of the optimal relaxed cost.

    M = S^{-2} - 2 S^{-1} + Id + (tau/2) S^{-1} sigma_a^{-1} S^{-1} with
    S = Id + (tau/2) sigma_a^{-1}.  Symmetric positive semidefinite; the
    optimal mean cost contribution is (a - b)^T M (a - b).
    """
    sigma_a = spd.check_spd(sigma_a)
    d = sigma_a.shape[0]
    s_inv = spd.inv_spd(sigma_alpha_tau(sigma_a, tau))
    a_inv = spd.inv_spd(sigma_a)
    return spd.symmetrize(
        s_inv @ s_inv - 2 * s_inv + np.eye(d) + (tau / 2) * s_inv @ a_inv @ s_inv
    )


def _relaxed_marginal_spectrum(sigma_a, sigma_b, tau):
    """Shared spectral core of the closed form.

    Returns (rb, u, lam, v) where rb = sigma_b^{-1/2}, (lam, u) is the
    spectrum of C = rb (Id + (tau/2) sigma_a^{-1}) rb, and v holds the
    eigenvalues of [C^{-1} Sigma_gamma]^{1/2}: the unique positive roots of
    lam * v^2 - v - tau/2 = 0, so that sigma_x = rb U diag(v^2) U^T rb.
    """
    s_at = sigma_alpha_tau(sigma_a, tau)
    rb = spd.inv_sqrt_spd(sigma_b)
    c = spd.symmetrize(rb @ s_at @ rb)
    lam, u = np.linalg.eigh(c)
    v = (1.0 + np.sqrt(1.0 + 2.0 * tau * lam)) / (2.0 * lam)
    return rb, u, lam, v


def solve_suot(alpha: GaussianMeasure, beta: GaussianMeasure, tau: float) -> SuotPlan:
    """Closed-form optimal plan of the KL-relaxed transport problem.

    Minimizes ``E_pi ||X - Y||^2 + tau KL(pi_x || alpha)`` over positive
    Gaussian plans whose second marginal has beta's shape.  Returns the
    relaxed first marginal (a_x, sigma_x), the aligned cross block, the
    optimal plan mass and the objective value ``tau * m_alpha *
    (1 - exp(-upsilon/tau))``.
    """
    if not tau > 0:
        raise InvalidInput(f"tau must be positive, got {tau}")
    if alpha.dim != beta.dim:
        raise InvalidInput(f"dimension mismatch: {alpha.dim} vs {beta.dim}")

    sigma_a, sigma_b = alpha.cov, beta.cov
    a, b = alpha.mean, beta.mean
    rb, u, _, v = _relaxed_marginal_spectrum(sigma_a, sigma_b, tau)

    s_at_inv = spd.inv_spd(sigma_alpha_tau(sigma_a, tau))
    a_x = s_at_inv @ (b - a) + a
    sigma_x = spd.symmetrize(rb @ (u @ ((v**2)[:, None] * u.T)) @ rb)

    # Per-unit-mass optimal value.  The trace of Sigma_gamma cancels against
    # the tau*d/2 constant, leaving tr(sigma_b) - sum(v) plus the log-det
    # and mean-quadratic terms.
    diff = a - b
    quad = float(diff @ mean_weight_matrix(sigma_a, tau) @ diff)
    upsilon = (
        spd.trace(sigma_b)
        - float(np.sum(v))
        - (tau / 2)
        * (2 * float(np.sum(np.log(v))) - spd.logdet(sigma_b) - spd.logdet(sigma_a))
        + quad
    )
    if not np.isfinite(upsilon):
        raise NonFinite("optimal objective value is non-finite")

    saturated = upsilon / tau > EXP_SATURATION
    m_pi = 0.0 if saturated else float(alpha.mass * np.exp(-upsilon / tau))
    cost = tau * alpha.mass - tau * m_pi

    sing = np.linalg.svd(
        spd.sqrt_spd(sigma_b) @ spd.sqrt_spd(sigma_x), compute_uv=False
    )
    k_xb = np.diag(sing)

    centered_unit = (
        abs(alpha.mass - 1) < 1e-12
        and abs(beta.mass - 1) < 1e-12
        and np.all(a == 0)
        and np.all(b == 0)
    )
    if centered_unit:
        direct = w2_squared_cov(sigma_x, sigma_b) + tau * kl_divergence_cov(
            sigma_x, sigma_a
        )
        err = abs(upsilon - direct) / max(abs(direct), 1.0)
        if err > _CONSISTENCY_RTOL:
            raise NonFinite(
                f"closed-form value disagrees with W2^2 + tau*KL by {err:.2e}"
            )

    return SuotPlan(a_x, sigma_x, k_xb, m_pi, float(upsilon), float(cost), saturated)


def suot_cost_centered(sigma_a: NDArray, sigma_b: NDArray, tau: float) -> float:
    """Relaxed transport cost between centered unit-mass Gaussians.

    Equals ``w2_squared(sigma_x, sigma_b) + tau * kl(sigma_x || sigma_a)``
    at the optimal relaxed marginal sigma_x (the probability-plan value of
    the objective, which the barycenter algorithms minimize).
    """
    if not tau > 0:
        raise InvalidInput(f"tau must be positive, got {tau}")
    sigma_a = spd.check_spd(sigma_a)
    sigma_b = spd.check_spd(sigma_b)
    rb, u, _, v = _relaxed_marginal_spectrum(sigma_a, sigma_b, tau)
    sigma_x = spd.symmetrize(rb @ (u @ ((v**2)[:, None] * u.T)) @ rb)
    val = w2_squared_cov(sigma_x, sigma_b) + tau * kl_divergence_cov(sigma_x, sigma_a)
    return max(val, 0.0)


def relaxed_marginal(sigma_a: NDArray, sigma_b: NDArray, tau: float) -> NDArray:
    """The optimal relaxed first-marginal covariance sigma_x (centered case)."""
    if not tau > 0:
        raise InvalidInput(f"tau must be positive, got {tau}")
    sigma_a = spd.check_spd(sigma_a)
    sigma_b = spd.check_spd(sigma_b)
    rb, u, _, v = _relaxed_marginal_spectrum(sigma_a, sigma_b, tau)
    return spd.symmetrize(rb @ (u @ ((v**2)[:, None] * u.T)) @ rb)


def cross_covariance(sigma_x: NDArray, sigma_b: NDArray) -> NDArray:
    """Ambient-basis cross block of the optimal plan.

    K = sigma_x^{1/2} H sigma_b^{1/2} with H the orthogonal factor aligning
    the singular bases of sigma_b^{1/2} sigma_x^{1/2}; the joint block
    matrix [[sigma_x, K], [K^T, sigma_b]] is then positive semidefinite
    with a vanishing Schur complement.
    """
    xh = spd.sqrt_spd(sigma_x)
    bh = spd.sqrt_spd(sigma_b)
    u, _, vh = np.linalg.svd(bh @ xh)
    h = vh.T @ u.T
    return xh @ h @ bh


def solve_entropic_suot(
    sigma_a: NDArray, sigma_b: NDArray, tau: float, delta: float
) -> tuple[NDArray, NDArray]:
    """Closed form of the entropically smoothed relaxed problem.

    Adds ``delta * KL(pi || alpha x beta)`` to the relaxed objective.  With
    C = sigma_b^{-1/2} (Id + ((tau+delta)/2) sigma_a^{-1}) sigma_b^{-1/2}
    and S = Id + (Id + (2 tau + 3 delta) C)^{1/2}, the relaxed marginal is
    sigma_x = sigma_b^{-1/2} [ (tau/2) C^{-1} + (1/2) C^{-2} S ]
    sigma_b^{-1/2}, and the cross block K = sigma_x^{1/2} sigma_b^{1/2}
    - (delta/4) Id.  Valid only while every singular value of
    sigma_b^{1/2} sigma_x^{1/2} stays >= delta/4; otherwise
    :class:`DeltaTooLarge` is raised (the clipped branch is out of scope).

    Returns (sigma_x, K).
    """
    params = SuotParams(tau, delta)
    sigma_a = spd.check_spd(sigma_a)
    sigma_b = spd.check_spd(sigma_b)
    d = sigma_a.shape[0]

    s_shift = np.eye(d) + ((params.tau + params.delta) / 2) * spd.inv_spd(sigma_a)
    rb = spd.inv_sqrt_spd(sigma_b)
    c = spd.symmetrize(rb @ s_shift @ rb)
    lam, u = np.linalg.eigh(c)
    s_eigs = 1.0 + np.sqrt(1.0 + (2 * params.tau + 3 * params.delta) * lam)
    bracket = (params.tau / 2) / lam + s_eigs / (2 * lam**2)
    sigma_x = spd.symmetrize(rb @ (u @ (bracket[:, None] * u.T)) @ rb)

    xh = spd.sqrt_spd(sigma_x)
    bh = spd.sqrt_spd(sigma_b)
    sing = np.linalg.svd(bh @ xh, compute_uv=False)
    if float(sing.min()) < params.delta / 4:
        raise DeltaTooLarge(
            f"min singular value {sing.min():.3e} of the coupling root is below "
            f"delta/4 = {params.delta / 4:.3e}; closed form does not apply"
        )
    k = xh @ bh - (params.delta / 4) * np.eye(d)
    return sigma_x, k


def suot_gradient(sigma_a: NDArray, sigma_b: NDArray, tau: float) -> NDArray:
    """Riemannian gradient of the centered relaxed cost in sigma_b.

    First-variation form: at the optimal relaxed marginal sigma_x, the cost
    locally behaves like the squared Bures-Wasserstein distance to a fixed
    sigma_x, so the gradient is 2 (Id - T_{sigma_b -> sigma_x}).  Expanded
    in closed form with R = sigma_b^{1/2} S^{-1} sigma_b^{1/2} and
    S = Id + (tau/2) sigma_a^{-1}:

        G = 2 Id - S^{-1} - sigma_b^{-1/2} [R^2 + 2 tau R]^{1/2} sigma_b^{-1/2}

    For every symmetric X, tangent_inner(sigma_b, G, X) equals the
    derivative of the cost along the geodesic exp_map(sigma_b, t X) at 0.
    """
    if not tau > 0:
        raise InvalidInput(f"tau must be positive, got {tau}")
    sigma_a = spd.check_spd(sigma_a)
    sigma_b = spd.check_spd(sigma_b)
    d = sigma_a.shape[0]
    s_at_inv = spd.inv_spd(sigma_alpha_tau(sigma_a, tau))
    bh = spd.sqrt_spd(sigma_b)
    rb = spd.inv_sqrt_spd(sigma_b)
    r = spd.symmetrize(bh @ s_at_inv @ bh)
    core = spd.spd_function(r, lambda w: np.sqrt(w**2 + 2 * tau * w))
    return spd.symmetrize(2 * np.eye(d) - s_at_inv - rb @ core @ rb)
