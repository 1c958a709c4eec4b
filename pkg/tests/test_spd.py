import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import rand_spd, rand_sym
from suotbary import spd
from suotbary.errors import InvalidInput, NotPositiveDefinite


class TestEig:
    def test_identity(self):
        dec = spd.eig(np.eye(2))
        assert_allclose(dec.eigenvalues, [1.0, 1.0])

    def test_diagonal_sorted_descending(self):
        dec = spd.eig(np.diag([4.0, 9.0]))
        assert_allclose(dec.eigenvalues, [9.0, 4.0])

    def test_reconstruction(self, rng):
        for _ in range(10):
            m = rand_sym(rng, 3)
            w, u = spd.eig(m)
            rec = u @ np.diag(w) @ u.T
            assert np.linalg.norm(rec - m) <= 1e-10 * max(np.linalg.norm(m), 1)
            assert np.linalg.norm(u.T @ u - np.eye(3)) <= 1e-10

    def test_sign_convention(self, rng):
        m = rand_sym(rng, 4)
        _, u = spd.eig(m)
        for j in range(4):
            col = u[:, j]
            first = col[np.nonzero(col)[0][0]]
            assert first >= 0

    def test_nonfinite_rejected(self):
        with pytest.raises(InvalidInput):
            spd.eig(np.array([[np.nan, 0.0], [0.0, 1.0]]))


class TestMatrixFunctions:
    def test_sqrt_identity(self):
        assert_allclose(spd.sqrt_spd(np.eye(3)), np.eye(3))

    def test_sqrt_diagonal(self):
        assert_allclose(spd.sqrt_spd(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))

    def test_sqrt_multiply_back(self, rng):
        for _ in range(10):
            a = rand_spd(rng, 4)
            s = spd.sqrt_spd(a)
            assert np.linalg.norm(s @ s - a) <= 1e-9 * np.linalg.norm(a)

    def test_sqrt_rejects_indefinite(self):
        with pytest.raises(NotPositiveDefinite):
            spd.sqrt_spd(np.diag([1.0, -1.0]))

    def test_inv(self):
        assert_allclose(spd.inv_spd(np.diag([2.0, 4.0])), np.diag([0.5, 0.25]))

    def test_inv_sqrt_consistent(self, rng):
        a = rand_spd(rng, 3)
        assert_allclose(
            spd.inv_sqrt_spd(a), spd.inv_spd(spd.sqrt_spd(a)), rtol=1e-9, atol=1e-12
        )

    def test_logdet(self):
        assert spd.logdet(np.eye(3)) == pytest.approx(0.0, abs=1e-14)
        assert spd.logdet(np.diag([np.e, np.e**2])) == pytest.approx(3.0, rel=1e-12)

    def test_expm_zero(self):
        assert_allclose(spd.expm_sym(np.zeros((2, 2))), np.eye(2))

    def test_expm_diagonal(self):
        assert_allclose(
            spd.expm_sym(np.diag([np.log(2.0), np.log(3.0)])),
            np.diag([2.0, 3.0]),
            rtol=1e-12,
        )

    def test_expm_eigenvalues(self, rng):
        a = rand_sym(rng, 4)
        got = np.sort(np.linalg.eigvalsh(spd.expm_sym(a)))
        want = np.sort(np.exp(np.linalg.eigvalsh(a)))
        assert_allclose(got, want, rtol=1e-10)


class TestLyapunov:
    def test_identity_base(self, rng):
        a = rand_sym(rng, 3)
        assert_allclose(spd.lyapunov_solve(np.eye(3), a), a / 2, rtol=1e-12)

    def test_two_by_two(self):
        b = np.diag([1.0, 3.0])
        a = np.ones((2, 2))
        x = spd.lyapunov_solve(b, a)
        assert_allclose(x, [[0.5, 0.25], [0.25, 1.0 / 6.0]], rtol=1e-12)
        assert_allclose(x @ b + b @ x, a, rtol=1e-12)

    def test_residual(self, rng):
        for _ in range(10):
            b = rand_spd(rng, 4)
            a = rand_sym(rng, 4)
            x = spd.lyapunov_solve(b, a)
            res = np.linalg.norm(x @ b + b @ x - a)
            assert res <= 1e-9 * np.linalg.norm(a)

    def test_trace_identity(self, rng):
        # tr of the solve at base sqrt(S) equals half of tr(S^{-1/2} A)
        for _ in range(5):
            s = rand_spd(rng, 3)
            a = rand_sym(rng, 3)
            lhs = np.trace(spd.lyapunov_solve(spd.sqrt_spd(s), a))
            rhs = 0.5 * np.trace(spd.inv_sqrt_spd(s) @ a)
            assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)


class TestBox:
    def test_clamp_example(self):
        got = spd.clamp_to_box(np.diag([0.01, 5.0]), 2.0)
        assert_allclose(got, np.diag([0.5, 2.0]), rtol=1e-12)

    def test_already_inside_unchanged(self, rng):
        m = np.diag([0.9, 1.4])
        assert_allclose(spd.clamp_to_box(m, 2.0), m, rtol=1e-12)

    def test_clamp_lands_in_box(self, rng):
        for _ in range(10):
            m = rand_spd(rng, 3, scale=2.0)
            assert spd.in_box(spd.clamp_to_box(m, 3.0), 3.0)

    def test_rho_must_exceed_one(self):
        with pytest.raises(InvalidInput):
            spd.in_box(np.eye(2), 1.0)


class TestAppendixIdentities:
    def test_logdet_directional_derivative(self, rng):
        # central difference at t = 1e-6 vs tr(A^{-1/2} B A^{-1/2})
        t = 1e-6
        for _ in range(5):
            a = rand_spd(rng, 3)
            b = rand_sym(rng, 3)
            fd = (spd.logdet(a + t * b) - spd.logdet(a - t * b)) / (2 * t)
            ra = spd.inv_sqrt_spd(a)
            want = np.trace(ra @ b @ ra)
            assert fd == pytest.approx(want, rel=1e-5)

    def test_trace_lemma(self, rng):
        # tr([AB]^{1/2}) computed three ways: through either symmetrized
        # square root and through the eigenvalues of the plain product
        for _ in range(8):
            a = rand_spd(rng, 4)
            b = rand_spd(rng, 4)
            ra, rb_ = spd.sqrt_spd(a), spd.sqrt_spd(b)
            via_a = np.trace(spd.sqrt_spd(ra @ b @ ra))
            via_b = np.trace(spd.sqrt_spd(rb_ @ a @ rb_))
            via_prod = np.sum(np.sqrt(np.linalg.eigvals(a @ b).real))
            assert via_a == pytest.approx(via_b, rel=1e-9)
            assert via_a == pytest.approx(via_prod, rel=1e-9)


class TestJson:
    def test_round_trip(self, rng):
        m = rand_spd(rng, 3)
        got = spd.matrix_from_json(spd.matrix_to_json(m))
        assert_allclose(got, m, rtol=0, atol=0)

    def test_rejects_asymmetry(self):
        obj = {"d": 2, "data": [1.0, 0.5, 0.5 + 1e-6, 1.0]}
        with pytest.raises(InvalidInput):
            spd.matrix_from_json(obj)

    def test_rejects_malformed(self):
        with pytest.raises(InvalidInput):
            spd.matrix_from_json({"d": 2, "data": [1.0, 0.0]})
        with pytest.raises(InvalidInput):
            spd.matrix_from_json({"data": [1.0]})

    def test_file_round_trip(self, tmp_path, rng):
        m = rand_spd(rng, 2)
        path = tmp_path / "m.json"
        spd.save_matrix(path, m)
        assert json.loads(path.read_text())["d"] == 2
        assert_allclose(spd.load_matrix(path), m)
