"""Scaled Gaussian measures and the classical quantities between them.

A scaled Gaussian is ``m * N(a, Sigma)`` with mass m > 0.  The 2-Wasserstein
distance and the optimal transport map use the standard closed forms for
Gaussians; the KL divergence is the generalized (unnormalized) one, which
decomposes into a shape part and a scalar mass part.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from . import spd
from .errors import InvalidInput


@dataclass(frozen=True)
class GaussianMeasure:
    """A scaled Gaussian measure mass * N(mean, cov)."""

    mass: float
    mean: NDArray
    cov: NDArray = field(repr=False)

    def __post_init__(self):
        if not (np.isfinite(self.mass) and self.mass > 0):
            raise InvalidInput(f"mass must be a positive real, got {self.mass}")
        mean = np.asarray(self.mean, dtype=np.float64).ravel()
        if not np.all(np.isfinite(mean)):
            raise InvalidInput("mean has non-finite entries")
        cov = spd.check_spd(self.cov, what="covariance")
        if cov.shape[0] != mean.size:
            raise InvalidInput(
                f"mean dimension {mean.size} != covariance dimension {cov.shape[0]}"
            )
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.size


def centered(cov: NDArray) -> GaussianMeasure:
    """Unit-mass centered Gaussian with the given covariance."""
    c = spd.check_spd(cov)
    return GaussianMeasure(1.0, np.zeros(c.shape[0]), c)


def _cross_trace(s1: NDArray, s2: NDArray) -> float:
    """tr([ S1^{1/2} S2 S1^{1/2} ]^{1/2})."""
    r = spd.sqrt_spd(s1)
    return spd.trace(spd.sqrt_spd(r @ s2 @ r))


def w2_squared(g1: GaussianMeasure, g2: GaussianMeasure) -> float:
    """Squared 2-Wasserstein distance between two Gaussian measures.

    ||a1 - a2||^2 + tr(S1 + S2 - 2 [S1^{1/2} S2 S1^{1/2}]^{1/2}).
    Masses are ignored (with a warning when either differs from 1).
    """
    if g1.dim != g2.dim:
        raise InvalidInput(f"dimension mismatch: {g1.dim} vs {g2.dim}")
    if abs(g1.mass - 1.0) > 1e-12 or abs(g2.mass - 1.0) > 1e-12:
        warnings.warn(
            "w2_squared is defined for probability measures; masses ignored",
            stacklevel=2,
        )
    val = (
        float(np.sum((g1.mean - g2.mean) ** 2))
        + spd.trace(g1.cov)
        + spd.trace(g2.cov)
        - 2 * _cross_trace(g1.cov, g2.cov)
    )
    return max(val, 0.0)


def w2_squared_cov(s1: NDArray, s2: NDArray) -> float:
    """w2_squared between centered unit-mass Gaussians given by covariances."""
    val = spd.trace(s1) + spd.trace(s2) - 2 * _cross_trace(s1, s2)
    return max(val, 0.0)


def kl_normalized(g1: GaussianMeasure, g2: GaussianMeasure) -> float:
    """KL divergence between the normalized (unit mass) Gaussians."""
    if g1.dim != g2.dim:
        raise InvalidInput(f"dimension mismatch: {g1.dim} vs {g2.dim}")
    d = g1.dim
    p2 = spd.inv_spd(g2.cov)
    diff = g1.mean - g2.mean
    return 0.5 * (
        spd.trace(p2 @ g1.cov)
        - d
        + spd.logdet(g2.cov)
        - spd.logdet(g1.cov)
        + float(diff @ p2 @ diff)
    )


def kl_divergence(g1: GaussianMeasure, g2: GaussianMeasure) -> float:
    """Generalized KL divergence between scaled Gaussians.

    Decomposes as m1 * KL(normalized_1 || normalized_2) + KL(m1 || m2)
    with the scalar part KL(m1||m2) = m1 log(m1/m2) - m1 + m2.
    """
    mass_kl = g1.mass * np.log(g1.mass / g2.mass) - g1.mass + g2.mass
    return float(g1.mass * kl_normalized(g1, g2) + mass_kl)


def kl_divergence_cov(s1: NDArray, s2: NDArray) -> float:
    """Generalized KL between centered unit-mass Gaussians (shape part only)."""
    d = s1.shape[0]
    return float(
        0.5 * (spd.trace(spd.inv_spd(s2) @ s1) - d + spd.logdet(s2) - spd.logdet(s1))
    )


def transport_map(src: NDArray, dst: NDArray) -> NDArray:
    """Optimal transport map between centered Gaussians, as a symmetric matrix.

    T = src^{-1/2} (src^{1/2} dst src^{1/2})^{1/2} src^{-1/2}, which satisfies
    T src T = dst.
    """
    r = spd.sqrt_spd(src)
    ri = spd.inv_sqrt_spd(src)
    return spd.symmetrize(ri @ spd.sqrt_spd(r @ dst @ r) @ ri)


def measure_to_json(g: GaussianMeasure) -> dict:
    return {
        "mass": float(g.mass),
        "mean": [float(x) for x in g.mean],
        "cov": spd.matrix_to_json(g.cov),
    }


def measure_from_json(obj: dict) -> GaussianMeasure:
    try:
        mass = float(obj["mass"])
        mean = np.asarray(obj["mean"], dtype=np.float64)
        cov = spd.matrix_from_json(obj["cov"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"malformed measure object: {exc}") from exc
    return GaussianMeasure(mass, mean, cov)


def load_measure(path) -> GaussianMeasure:
    with open(path) as fh:
        return measure_from_json(json.load(fh))


def save_measure(path, g: GaussianMeasure) -> None:
    with open(path, "w") as fh:
        json.dump(measure_to_json(g), fh)
