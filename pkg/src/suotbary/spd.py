"""Dense symmetric / SPD matrix algebra.

All functions operate on plain ``numpy.ndarray`` matrices.  Inputs are
symmetrized on entry ((M + M^T)/2), outputs of matrix functions are
symmetrized before return to suppress round-off asymmetry, and any
eigenvalue below :data:`EIG_FLOOR` raises
:class:`~suotbary.errors.NotPositiveDefinite` rather than being silently
regularized.
"""

from __future__ import annotations

import json
from typing import Callable, NamedTuple

import numpy as np
from numpy.typing import NDArray

from .errors import InvalidInput, NotPositiveDefinite

#: Eigenvalues below this are treated as a positive-definiteness failure.
EIG_FLOOR = 1e-12

#: JSON matrix readers reject asymmetry beyond this (max-abs entry).
JSON_ASYMMETRY_TOL = 1e-9


class EigDecomp(NamedTuple):
    """Spectral decomposition with eigenvalues sorted in descending order.

    ``eigenvectors[:, i]`` is the unit eigenvector for ``eigenvalues[i]``,
    with a deterministic sign convention: the first nonzero component of
    each column is nonnegative.
    """

    eigenvalues: NDArray
    eigenvectors: NDArray


def symmetrize(m: NDArray) -> NDArray:
    """Return the symmetric part (M + M^T)/2 as float64, validating shape."""
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInput(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInput("matrix has non-finite entries")
    return (a + a.T) / 2


def eig(m: NDArray) -> EigDecomp:
    """Sorted spectral decomposition of a symmetric matrix."""
    a = symmetrize(m)
    w, u = np.linalg.eigh(a)
    order = np.argsort(w)[::-1]
    w = w[order]
    u = u[:, order]
    for j in range(u.shape[1]):
        col = u[:, j]
        nz = np.nonzero(col)[0]
        if nz.size and col[nz[0]] < 0:
            u[:, j] = -col
    return EigDecomp(w, u)


def _spd_eig(m: NDArray, *, what: str = "matrix") -> EigDecomp:
    dec = eig(m)
    lo = float(dec.eigenvalues[-1])
    if lo < EIG_FLOOR:
        raise NotPositiveDefinite(
            f"{what} has eigenvalue {lo:.3e} below floor {EIG_FLOOR:.0e}"
        )
    return dec


def spd_function(m: NDArray, f: Callable[[NDArray], NDArray]) -> NDArray:
    """Apply a scalar function to the spectrum of an SPD matrix."""
    w, u = _spd_eig(m)
    return symmetrize(u @ (f(w)[:, None] * u.T))


def sqrt_spd(m: NDArray) -> NDArray:
    """Principal square root of an SPD matrix."""
    return spd_function(m, np.sqrt)


def inv_spd(m: NDArray) -> NDArray:
    """Inverse of an SPD matrix (via its spectrum)."""
    return spd_function(m, lambda w: 1.0 / w)


def inv_sqrt_spd(m: NDArray) -> NDArray:
    """Inverse principal square root of an SPD matrix."""
    return spd_function(m, lambda w: 1.0 / np.sqrt(w))


def logdet(m: NDArray) -> float:
    """log(det M) for SPD M, computed as the sum of eigenvalue logs."""
    w, _ = _spd_eig(m)
    return float(np.sum(np.log(w)))


def trace(m: NDArray) -> float:
    return float(np.trace(np.asarray(m, dtype=np.float64)))


def frobenius(m: NDArray) -> float:
    return float(np.linalg.norm(np.asarray(m, dtype=np.float64), "fro"))


def expm_sym(m: NDArray) -> NDArray:
    """Matrix exponential of a symmetric matrix: P diag(e^lambda) P^T."""
    a = symmetrize(m)
    w, u = np.linalg.eigh(a)
    return symmetrize(u @ (np.exp(w)[:, None] * u.T))


def lyapunov_solve(b: NDArray, a: NDArray) -> NDArray:
    """Solve X b + b X = a for symmetric X, with b SPD and a symmetric.

    Computed entrywise in b's eigenbasis: X~_ij = a~_ij / (lambda_i + lambda_j).
    """
    wb, ub = _spd_eig(b, what="lyapunov base")
    at = ub.T @ symmetrize(a) @ ub
    xt = at / (wb[:, None] + wb[None, :])
    return symmetrize(ub @ xt @ ub.T)


def clamp_to_box(m: NDArray, rho: float) -> NDArray:
    """Project the spectrum of an SPD matrix into [1/rho, rho]."""
    if not rho > 1:
        raise InvalidInput(f"rho must be > 1, got {rho}")
    return spd_function(m, lambda w: np.clip(w, 1.0 / rho, rho))


def in_box(m: NDArray, rho: float, *, tol: float = 1e-12) -> bool:
    """Whether all eigenvalues of m lie in [1/rho, rho] (within tol)."""
    if not rho > 1:
        raise InvalidInput(f"rho must be > 1, got {rho}")
    w = np.linalg.eigvalsh(symmetrize(m))
    return bool(w[0] >= 1.0 / rho - tol and w[-1] <= rho + tol)


def check_spd(m: NDArray, *, what: str = "matrix") -> NDArray:
    """Symmetrize and verify positive definiteness; returns the matrix."""
    a = symmetrize(m)
    _spd_eig(a, what=what)
    return a


def matrix_to_json(m: NDArray) -> dict:
    """Serialize a square matrix to the on-disk JSON object."""
    a = symmetrize(m)
    return {"d": int(a.shape[0]), "data": [float(x) for x in a.ravel()]}


def matrix_from_json(obj: dict) -> NDArray:
    """Parse the matrix JSON object, rejecting asymmetry beyond 1e-9."""
    try:
        d = int(obj["d"])
        data = np.asarray(obj["data"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"malformed matrix object: {exc}") from exc
    if d < 1 or data.shape != (d * d,):
        raise InvalidInput(f"matrix data length {data.size} != d*d for d={d}")
    a = data.reshape(d, d)
    if not np.all(np.isfinite(a)):
        raise InvalidInput("matrix has non-finite entries")
    asym = float(np.abs(a - a.T).max())
    if asym > JSON_ASYMMETRY_TOL:
        raise InvalidInput(f"matrix asymmetry {asym:.3e} exceeds {JSON_ASYMMETRY_TOL}")
    return (a + a.T) / 2


def load_matrix(path) -> NDArray:
    with open(path) as fh:
        return matrix_from_json(json.load(fh))


def save_matrix(path, m: NDArray) -> None:
    with open(path, "w") as fh:
        json.dump(matrix_to_json(m), fh)
