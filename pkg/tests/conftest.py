import numpy as np
import pytest

from suotbary.spd import expm_sym, symmetrize


def rand_spd(rng, d, scale=0.7):
    """Random SPD matrix with log-spectrum spread ~scale."""
    return expm_sym(symmetrize(rng.normal(0.0, scale, (d, d))))


def rand_sym(rng, d, scale=1.0):
    return symmetrize(rng.normal(0.0, scale, (d, d)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
