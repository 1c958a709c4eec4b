"""Robust barycenters of Gaussian measures via KL-relaxed optimal transport.

The package computes closed-form semi-unbalanced transport plans between
Gaussians, the associated Riemannian gradient on the Bures-Wasserstein
manifold, and two convergent barycenter algorithms, all validated against
independent brute-force oracles.
"""

from .barycenter import (
    BarycenterProblem,
    OptimConfig,
    RunTrace,
    exact_geodesic_gd,
    exact_sgd,
    hybrid_gd,
    hybrid_sgd,
    mean_barycenter,
    numeric_gd_baseline,
    objective,
    wasserstein_barycenter,
)
from .bures import (
    TangentVector,
    exp_map,
    geodesic,
    log_map,
    sample_spd,
    tangent_inner,
    tangent_norm,
)
from .errors import (
    BoxViolation,
    DeltaTooLarge,
    InvalidInput,
    NonConvergence,
    NonFinite,
    NotPositiveDefinite,
    RetractionOutOfCone,
    SingularSystem,
    SuotBaryError,
)
from .gaussian import (
    GaussianMeasure,
    centered,
    kl_divergence,
    transport_map,
    w2_squared,
)
from .oracle import (
    OracleReport,
    brute_force_suot,
    fd_directional_derivative,
    golden_section_min,
)
from .suot import (
    SuotParams,
    SuotPlan,
    mean_weight_matrix,
    sigma_alpha_tau,
    solve_entropic_suot,
    solve_suot,
    suot_cost_centered,
    suot_gradient,
)

__version__ = "0.1.0"

__all__ = [
    "BarycenterProblem",
    "BoxViolation",
    "DeltaTooLarge",
    "GaussianMeasure",
    "InvalidInput",
    "NonConvergence",
    "NonFinite",
    "NotPositiveDefinite",
    "OptimConfig",
    "OracleReport",
    "RetractionOutOfCone",
    "RunTrace",
    "SingularSystem",
    "SuotBaryError",
    "SuotParams",
    "SuotPlan",
    "TangentVector",
    "brute_force_suot",
    "centered",
    "exact_geodesic_gd",
    "exact_sgd",
    "exp_map",
    "fd_directional_derivative",
    "geodesic",
    "golden_section_min",
    "hybrid_gd",
    "hybrid_sgd",
    "kl_divergence",
    "log_map",
    "mean_barycenter",
    "mean_weight_matrix",
    "numeric_gd_baseline",
    "objective",
    "sample_spd",
    "sigma_alpha_tau",
    "solve_entropic_suot",
    "solve_suot",
    "suot_cost_centered",
    "suot_gradient",
    "tangent_inner",
    "tangent_norm",
    "transport_map",
    "w2_squared",
    "wasserstein_barycenter",
]
