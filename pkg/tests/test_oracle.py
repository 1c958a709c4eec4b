import numpy as np
import pytest

from conftest import rand_spd, rand_sym
from suotbary import oracle
from suotbary.gaussian import kl_divergence_cov, w2_squared_cov


class TestGoldenSection:
    def test_parabola(self):
        x, fx = oracle.golden_section_min(lambda v: (v - 3.0) ** 2, 0.0, 10.0)
        assert x == pytest.approx(3.0, abs=1e-9)
        assert fx == pytest.approx(0.0, abs=1e-15)

    def test_scalar_eigen_subproblem(self):
        u, tau = 0.5, 2.0
        x, _ = oracle.golden_section_min(
            lambda v: u * v**2 - 2 * v - tau * np.log(v), 1e-6, 50.0
        )
        want = (1 + np.sqrt(1 + 2 * u * tau)) / (2 * u)  # 1 + sqrt(3)
        assert x == pytest.approx(want, abs=1e-8)
        assert want == pytest.approx(1 + np.sqrt(3.0), rel=1e-15)

    def test_mass_objective(self):
        m_alpha, ups, tau = 1.7, 0.9, 2.5

        def f(m):
            kl = m * np.log(m / m_alpha) - m + m_alpha
            return m * ups + tau * kl

        x, _ = oracle.golden_section_min(f, 1e-9, 10.0)
        assert x == pytest.approx(m_alpha * np.exp(-ups / tau), rel=1e-8)


class TestFdDirectionalDerivative:
    def test_constant_function(self, rng):
        base = rand_spd(rng, 3)
        x = rand_sym(rng, 3)
        assert oracle.fd_directional_derivative(lambda s: 7.0, base, x) == 0.0

    def test_trace_along_identity_direction(self, rng):
        # d/dt tr((Id + tI) S (Id + tI)) at 0 is 2 tr(S)
        base = rand_spd(rng, 3)
        got = oracle.fd_directional_derivative(np.trace, base, np.eye(3))
        assert got == pytest.approx(2 * np.trace(base), rel=1e-8)

    def test_richardson_step_robustness(self, rng):
        base = rand_spd(rng, 3)
        x = rand_sym(rng, 3)

        def f(s):
            return w2_squared_cov(s, np.eye(3))

        d1 = oracle.fd_directional_derivative(f, base, x, h=1e-4)
        d2 = oracle.fd_directional_derivative(f, base, x, h=5e-5)
        assert d1 == pytest.approx(d2, rel=1e-6)


class TestBruteForce:
    def test_coincident_measures(self, rng):
        s = rand_spd(rng, 2)
        argmin, value = oracle.brute_force_suot(s, s, 1.0, restarts=2, seed=0)
        assert value == pytest.approx(0.0, abs=1e-9)
        assert np.linalg.norm(argmin - s) <= 1e-3 * np.linalg.norm(s)

    def test_scalar_instance(self):
        sa, sb = np.array([[1.0]]), np.array([[4.0]])
        argmin, value = oracle.brute_force_suot(sa, sb, 2.0, restarts=2, seed=0)
        # stationarity of (sqrt(x)-2)^2 + 2*KL(x||1): 2 - 2/sqrt(x) - 1/x = 0
        x = argmin[0, 0]
        assert 2 - 2 / np.sqrt(x) - 1 / x == pytest.approx(0.0, abs=1e-6)
        assert x == pytest.approx(1 + np.sqrt(3.0) / 2, rel=1e-6)
        assert value == pytest.approx(0.6441384760662512, rel=1e-8)

    def test_seed_self_consistency(self, rng):
        sa, sb = rand_spd(rng, 2), rand_spd(rng, 2)
        _, v1 = oracle.brute_force_suot(sa, sb, 0.7, restarts=3, seed=11)
        _, v2 = oracle.brute_force_suot(sa, sb, 0.7, restarts=3, seed=77)
        assert v1 == pytest.approx(v2, rel=1e-5)

    def test_objective_value_is_feasible_cost(self, rng):
        # returned value must equal the objective at the returned point
        sa, sb = rand_spd(rng, 2), rand_spd(rng, 2)
        argmin, value = oracle.brute_force_suot(sa, sb, 1.3, restarts=2, seed=5)
        direct = w2_squared_cov(argmin, sb) + 1.3 * kl_divergence_cov(argmin, sa)
        assert value == pytest.approx(direct, rel=1e-10)


class TestOracleReport:
    def test_pass_fail_and_json(self):
        good = oracle.OracleReport("x", 1.0, 1.0 + 1e-9, 1e-6)
        bad = oracle.OracleReport("y", 1.0, 2.0, 1e-6)
        assert good.passed and not bad.passed
        assert good.rel_error == pytest.approx(1e-9, rel=1e-3)
        blob = oracle.reports_to_json([good, bad])
        assert '"passed": true' in blob and '"passed": false' in blob


class TestBruteForceGuards:
    def test_restarts_must_be_positive(self, rng):
        from suotbary.errors import InvalidInput

        s = rand_spd(rng, 2)
        with pytest.raises(InvalidInput):
            oracle.brute_force_suot(s, s, 1.0, restarts=0)

    def test_nonconvergence_raised_when_stationarity_fails(self, rng, monkeypatch):
        from types import SimpleNamespace

        from scipy import optimize

        from suotbary.errors import NonConvergence

        def fake_minimize(fun, x0, **kwargs):
            return SimpleNamespace(x=x0, fun=fun(x0))  # no descent at all

        monkeypatch.setattr(optimize, "minimize", fake_minimize)
        sa, sb = rand_spd(rng, 2), rand_spd(rng, 2)
        with pytest.raises(NonConvergence):
            oracle.brute_force_suot(sa, sb, 1.0, restarts=2, seed=0)
