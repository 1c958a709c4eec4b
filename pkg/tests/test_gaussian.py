import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import integrate

from conftest import rand_spd
from suotbary import gaussian, spd
from suotbary.errors import InvalidInput
from suotbary.gaussian import GaussianMeasure, centered


def measure(mass, mean, cov):
    return GaussianMeasure(mass, np.atleast_1d(mean), np.atleast_2d(cov))


class TestW2:
    def test_identical_is_zero(self):
        g = measure(1.0, [0.0, 0.0], np.eye(2))
        assert gaussian.w2_squared(g, g) == pytest.approx(0.0, abs=1e-12)

    def test_mean_shift_only(self):
        g1 = measure(1.0, [0.0, 0.0], np.eye(2))
        g2 = measure(1.0, [3.0, 4.0], np.eye(2))
        assert gaussian.w2_squared(g1, g2) == pytest.approx(25.0, rel=1e-12)

    def test_scalar_formula(self):
        g1 = measure(1.0, 0.0, 1.0)
        g2 = measure(1.0, 0.0, 4.0)
        # 1 + 4 - 2*2
        assert gaussian.w2_squared(g1, g2) == pytest.approx(1.0, rel=1e-12)

    def test_metric_properties(self, rng):
        for _ in range(10):
            d = int(rng.integers(1, 4))
            g1 = measure(1.0, rng.normal(0, 1, d), rand_spd(rng, d))
            g2 = measure(1.0, rng.normal(0, 1, d), rand_spd(rng, d))
            v12 = gaussian.w2_squared(g1, g2)
            v21 = gaussian.w2_squared(g2, g1)
            assert v12 >= 0
            assert v12 == pytest.approx(v21, rel=1e-8, abs=1e-10)
            assert gaussian.w2_squared(g1, g1) == pytest.approx(0.0, abs=1e-9)
            assert v12 > 1e-8  # distinct parameters

    def test_mass_warning(self):
        g1 = measure(2.0, 0.0, 1.0)
        g2 = measure(1.0, 0.0, 1.0)
        with pytest.warns(UserWarning):
            gaussian.w2_squared(g1, g2)

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidInput):
            gaussian.w2_squared(
                measure(1.0, 0.0, 1.0), measure(1.0, [0.0, 0.0], np.eye(2))
            )

    def test_singular_value_form(self, rng):
        # centered: closed form equals tr(S1) + tr(S2) - 2 * sum of
        # singular values of S1^{1/2} S2^{1/2}
        for _ in range(10):
            d = int(rng.integers(1, 5))
            s1, s2 = rand_spd(rng, d), rand_spd(rng, d)
            closed = gaussian.w2_squared_cov(s1, s2)
            sing = np.linalg.svd(
                spd.sqrt_spd(s1) @ spd.sqrt_spd(s2), compute_uv=False
            )
            other = np.trace(s1) + np.trace(s2) - 2 * np.sum(sing)
            assert closed == pytest.approx(other, rel=1e-9, abs=1e-12)


class TestKL:
    def test_identical_is_zero(self, rng):
        g = measure(1.3, [0.4], rand_spd(rng, 1))
        assert gaussian.kl_divergence(g, g) == pytest.approx(0.0, abs=1e-12)

    def test_mass_only(self):
        g1 = measure(2.0, 0.0, 1.0)
        g2 = measure(1.0, 0.0, 1.0)
        assert gaussian.kl_divergence(g1, g2) == pytest.approx(
            2 * np.log(2.0) - 1.0, rel=1e-12
        )

    def test_scalar_value(self):
        g1 = measure(1.0, 0.0, 1.0)
        g2 = measure(1.0, 0.0, 2.0)
        want = 0.5 * (0.5 - 1 + np.log(2.0))
        assert gaussian.kl_divergence(g1, g2) == pytest.approx(want, rel=1e-12)

    def test_scalar_value_against_quadrature(self):
        # independent oracle: numerical integration of p log(p/q)
        def p(x):
            return np.exp(-(x**2) / 2) / np.sqrt(2 * np.pi)

        def q(x):
            return np.exp(-(x**2) / 4) / np.sqrt(4 * np.pi)

        val, _ = integrate.quad(lambda x: p(x) * np.log(p(x) / q(x)), -12, 12)
        g1 = measure(1.0, 0.0, 1.0)
        g2 = measure(1.0, 0.0, 2.0)
        assert gaussian.kl_divergence(g1, g2) == pytest.approx(val, rel=1e-9)

    def test_nonnegative(self, rng):
        for _ in range(10):
            d = int(rng.integers(1, 4))
            g1 = measure(
                float(rng.uniform(0.5, 2)), rng.normal(0, 1, d), rand_spd(rng, d)
            )
            g2 = measure(
                float(rng.uniform(0.5, 2)), rng.normal(0, 1, d), rand_spd(rng, d)
            )
            assert gaussian.kl_divergence(g1, g1) == pytest.approx(0.0, abs=1e-10)
            # generalized KL of distinct scaled measures stays nonnegative
            assert gaussian.kl_divergence(g1, g2) >= -1e-12


class TestTransportMap:
    def test_identity(self, rng):
        s = rand_spd(rng, 3)
        assert_allclose(gaussian.transport_map(s, s), np.eye(3), atol=1e-10)

    def test_diagonal(self):
        t = gaussian.transport_map(np.eye(2), np.diag([4.0, 9.0]))
        assert_allclose(t, np.diag([2.0, 3.0]), rtol=1e-12)

    def test_pushforward(self, rng):
        for _ in range(10):
            d = int(rng.integers(1, 5))
            src, dst = rand_spd(rng, d), rand_spd(rng, d)
            t = gaussian.transport_map(src, dst)
            assert np.linalg.norm(t - t.T) <= 1e-12 * max(1, np.linalg.norm(t))
            assert np.linalg.norm(t @ src @ t - dst) <= 1e-9 * np.linalg.norm(dst)


class TestMeasureValidation:
    def test_bad_mass(self):
        with pytest.raises(InvalidInput):
            measure(0.0, 0.0, 1.0)

    def test_cov_must_be_spd(self):
        with pytest.raises(Exception):
            measure(1.0, [0.0, 0.0], np.diag([1.0, -2.0]))

    def test_centered_helper(self, rng):
        c = rand_spd(rng, 3)
        g = centered(c)
        assert g.mass == 1.0
        assert_allclose(g.mean, np.zeros(3))

    def test_json_round_trip(self, tmp_path, rng):
        g = measure(1.5, [0.2, -0.3], rand_spd(rng, 2))
        path = tmp_path / "g.json"
        gaussian.save_measure(path, g)
        back = gaussian.load_measure(path)
        assert back.mass == g.mass
        assert_allclose(back.mean, g.mean)
        assert_allclose(back.cov, g.cov)
