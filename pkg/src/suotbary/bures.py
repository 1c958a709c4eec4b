"""Bures-Wasserstein manifold primitives.

The manifold is the SPD cone with the metric induced by the 2-Wasserstein
distance between centered Gaussians.  Tangent vectors at Sigma are symmetric
matrices X with inner product <A, B>_Sigma = tr(A Sigma B); the exponential
map is the retraction (Id + X) Sigma (Id + X) and its inverse is the
transport map minus the identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from . import spd
from .errors import InvalidInput, RetractionOutOfCone
from .gaussian import transport_map


@dataclass(frozen=True)
class TangentVector:
    """A tangent vector: symmetric direction ``dir`` at SPD base point."""

    base: NDArray = field(repr=False)
    dir: NDArray = field(repr=False)

    def __post_init__(self):
        base = spd.check_spd(self.base, what="tangent base")
        direction = spd.symmetrize(self.dir)
        if base.shape != direction.shape:
            raise InvalidInput("base and direction shapes differ")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "dir", direction)


def exp_map(v: TangentVector) -> NDArray:
    """(Id + X) Sigma (Id + X); requires Id + X to stay in the SPD cone."""
    d = v.base.shape[0]
    m = np.eye(d) + v.dir
    lo = float(np.linalg.eigvalsh(m)[0])
    if lo <= spd.EIG_FLOOR:
        raise RetractionOutOfCone(
            f"Id + X has minimal eigenvalue {lo:.3e}; retraction leaves the cone"
        )
    return spd.symmetrize(m @ v.base @ m)


def log_map(src: NDArray, dst: NDArray) -> TangentVector:
    """Inverse of exp_map: direction T_{src->dst} - Id at src."""
    src = spd.check_spd(src)
    t = transport_map(src, dst)
    return TangentVector(src, t - np.eye(src.shape[0]))


def tangent_inner(base: NDArray, a: NDArray, b: NDArray) -> float:
    """Tangent-space inner product tr(A Sigma B) at the given base point."""
    base = np.asarray(base, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if not (base.shape == a.shape == b.shape):
        raise InvalidInput("tangent_inner arguments must share one shape")
    return float(np.trace(a @ base @ b))


def tangent_norm(base: NDArray, a: NDArray) -> float:
    """Induced norm sqrt(tr(A Sigma A)); clips round-off negatives to 0."""
    return float(np.sqrt(max(tangent_inner(base, a, a), 0.0)))


def geodesic(src: NDArray, dst: NDArray, t: float) -> NDArray:
    """Point at parameter t on the geodesic from src to dst.

    [Id + t(T - Id)] src [Id + t(T - Id)] for t in [0, 1]; endpoints are
    returned exactly.  Values of t outside [0, 1] are rejected.
    """
    if not 0.0 <= t <= 1.0:
        raise InvalidInput(f"geodesic parameter t={t} outside [0, 1]")
    src = spd.check_spd(src)
    dst = spd.check_spd(dst)
    if t == 0.0:
        return src
    if t == 1.0:
        return dst
    d = src.shape[0]
    m = np.eye(d) + t * (transport_map(src, dst) - np.eye(d))
    return spd.symmetrize(m @ src @ m)


def sample_spd(d: int, sigma: float, seed: int) -> NDArray:
    """Random SPD matrix: expm of the symmetrized iid N(0, sigma^2) matrix.

    Uses numpy's PCG64 generator seeded with ``seed``; identical seeds give
    bit-identical output.  Derived per-item streams elsewhere in the package
    use ``seed + index``.
    """
    if d < 1:
        raise InvalidInput(f"dimension must be >= 1, got {d}")
    if sigma < 0:
        raise InvalidInput(f"sigma must be nonnegative, got {sigma}")
    rng = np.random.default_rng(seed)
    a = rng.normal(0.0, sigma, size=(d, d)) if sigma > 0 else np.zeros((d, d))
    return spd.expm_sym((a + a.T) / 2)


def sample_diagonal_spd(d: int, sigma: float, seed: int) -> NDArray:
    """Random diagonal SPD matrix: diag(exp(N(0, sigma^2))) entries."""
    if d < 1:
        raise InvalidInput(f"dimension must be >= 1, got {d}")
    rng = np.random.default_rng(seed)
    x = rng.normal(0.0, sigma, size=d) if sigma > 0 else np.zeros(d)
    return np.diag(np.exp(x))
