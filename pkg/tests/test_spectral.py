"""Sharpness estimators: exact 2x2, shifted power iteration, FD gradient."""

import math

import numpy as np
import pytest

from catapult_lab.models import DiagonalNetState, eval_ldn, eval_scalar_relu, ldn_hvp
from catapult_lab.models import ScalarReluState, Simple2DState, eval_simple2d
from catapult_lab.models import generate_sparse_regression
from catapult_lab.spectral import (
    grad_sharpness_fd,
    sharpness_exact_2x2,
    sharpness_power,
)

from oracles import fd_hessian, jacobi_eigenvalues


class TestExact2x2:
    def test_diagonal(self):
        est = sharpness_exact_2x2(np.array([[4.0, 0.0], [0.0, 0.0]]))
        assert est.value == pytest.approx(4.0)
        np.testing.assert_allclose(est.eigvec, [1.0, 0.0])

    def test_relu_hessian_at_axis(self):
        # [[v^2, 2uv], [2uv, u^2]] with v = 0 has top pair (u^2, e2)
        u = 3.0
        H = np.array([[0.0, 0.0], [0.0, u * u]])
        est = sharpness_exact_2x2(H)
        assert est.value == pytest.approx(u * u)
        np.testing.assert_allclose(est.eigvec, [0.0, 1.0], atol=1e-15)

    def test_hand_symmetric(self):
        est = sharpness_exact_2x2(np.array([[2.0, 1.0], [1.0, 2.0]]))
        assert est.value == pytest.approx(3.0)
        np.testing.assert_allclose(est.eigvec, np.array([1.0, 1.0]) / math.sqrt(2))

    def test_identity_multiple(self):
        est = sharpness_exact_2x2(np.eye(2) * 7.0)
        assert est.value == pytest.approx(7.0)
        assert est.residual <= 1e-12

    def test_eigen_residual_random(self, rng):
        for _ in range(200):
            A = rng.standard_normal((2, 2))
            H = 0.5 * (A + A.T)
            est = sharpness_exact_2x2(H)
            assert est.residual <= 1e-10 * max(1.0, abs(est.value))
            assert np.linalg.norm(est.eigvec) == pytest.approx(1.0, abs=1e-10)

    def test_sign_normalization_deterministic(self, rng):
        A = rng.standard_normal((2, 2))
        H = 0.5 * (A + A.T)
        a = sharpness_exact_2x2(H)
        b = sharpness_exact_2x2(H.copy())
        np.testing.assert_array_equal(a.eigvec, b.eigvec)
        first = a.eigvec[np.abs(a.eigvec) > 1e-12][0]
        assert first > 0


class TestPowerIteration:
    def test_identity(self):
        est = sharpness_power(lambda v: v, dim=5)
        assert est.value == pytest.approx(1.0, abs=1e-9)
        assert est.converged

    def test_matches_dense_oracle_random(self, rng):
        for _ in range(30):
            n = int(rng.integers(3, 9))
            A = rng.standard_normal((n, n))
            H = 0.5 * (A + A.T)
            est = sharpness_power(lambda v: H @ v, n, tol=1e-10,
                                  seed=int(rng.integers(10**6)))
            oracle = jacobi_eigenvalues(H)[-1]
            assert est.value == pytest.approx(oracle, rel=1e-6, abs=1e-8)

    def test_algebraic_not_magnitude(self):
        H = np.diag([-5.0, 1.0])
        est = sharpness_power(lambda v: H @ v, 2, tol=1e-12)
        assert est.value == pytest.approx(1.0, abs=1e-9)

    def test_agrees_with_exact_on_2x2(self, rng):
        for _ in range(50):
            A = rng.standard_normal((2, 2))
            H = 0.5 * (A + A.T)
            exact = sharpness_exact_2x2(H)
            power = sharpness_power(lambda v: H @ v, 2, tol=1e-12,
                                    seed=int(rng.integers(10**6)))
            assert power.value == pytest.approx(exact.value, rel=1e-8, abs=1e-10)

    def test_eigvec_contract(self, rng):
        A = rng.standard_normal((6, 6))
        H = 0.5 * (A + A.T)
        tol = 1e-9
        est = sharpness_power(lambda v: H @ v, 6, tol=tol)
        assert np.linalg.norm(H @ est.eigvec - est.value * est.eigvec) <= tol * max(
            1.0, abs(est.value)
        )

    def test_seed_stability_on_ldn(self):
        data = generate_sparse_regression(30, 12, 2.0, 1.0, 3, seed=5)
        d = data.d
        state = DiagonalNetState(np.full(d, 0.3), np.full(d, 0.28))
        vals = []
        for seed in range(5):
            est = sharpness_power(
                lambda v: ldn_hvp(state, data, v), 2 * d, tol=1e-10, seed=seed
            )
            assert est.converged
            vals.append(est.value)
        assert max(vals) - min(vals) <= 1e-6 * abs(vals[0])

    def test_max_iters_flag(self):
        H = np.diag([1.0, 1.0 - 1e-12])
        est = sharpness_power(lambda v: H @ v, 2, tol=1e-16, max_iters=5)
        assert not est.converged
        assert est.iterations == 5

    def test_zero_operator(self):
        est = sharpness_power(lambda v: np.zeros_like(v), 4)
        assert est.value == pytest.approx(0.0, abs=1e-12)


class TestGradSharpnessFd:
    @staticmethod
    def _relu_hess(theta):
        return eval_scalar_relu(ScalarReluState(*theta)).hessian

    @staticmethod
    def _simple_hess(theta):
        return eval_simple2d(Simple2DState(*theta)).hessian

    def test_relu_axis_gradient(self):
        # S(u, 0) = u^2 away from the kink, so dS = (2u, 0)
        grad, degen = grad_sharpness_fd(self._relu_hess, np.array([3.0, 0.0]), h=1e-5)
        assert not degen
        assert grad[0] == pytest.approx(6.0, rel=1e-5)
        assert grad[1] == pytest.approx(0.0, abs=1e-6)

    def test_flat_region_zero(self):
        grad, degen = grad_sharpness_fd(self._relu_hess, np.array([-2.0, 1.0]), h=1e-5)
        np.testing.assert_array_equal(grad, [0.0, 0.0])
        assert degen  # identically-zero Hessian has no eigengap

    def test_simple2d_manifold_derivative(self):
        # along the minima curve (sqrt(v^2+1), v) the sharpness is 8 v^2 + 4
        v_star = 0.8
        u_star = math.sqrt(v_star**2 + 1.0)
        grad, degen = grad_sharpness_fd(
            self._simple_hess, np.array([u_star, v_star]), h=1e-6
        )
        assert not degen
        tangent = np.array([v_star / u_star, 1.0])
        assert float(grad @ tangent) == pytest.approx(16.0 * v_star, rel=1e-4)

    def test_degenerate_flag(self):
        # equal eigenvalues: gap 0 < 10h
        grad, degen = grad_sharpness_fd(lambda th: np.eye(2), np.zeros(2), h=1e-4)
        assert degen
