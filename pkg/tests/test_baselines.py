"""Minimum-norm interpolating baselines against their defining properties
and a brute-force support-enumeration oracle."""

import math

import numpy as np
import pytest

from catapult_lab.baselines import min_l1_baseline, min_l2_baseline
from catapult_lab.models import RegressionDataset, generate_sparse_regression

from oracles import brute_force_min_l1


def _tiny_dataset(seed, n=4, d=8):
    return generate_sparse_regression(n, d, 2.0, 0.5, 2, seed=seed)


class TestMinL2:
    def test_interpolates(self, default_dataset):
        sol = min_l2_baseline(default_dataset)
        resid = np.linalg.norm(default_dataset.inputs @ sol.w - default_dataset.targets)
        assert resid <= 1e-8 * np.linalg.norm(default_dataset.targets)

    def test_least_norm_property(self, rng, default_dataset):
        # adding any null-space component strictly increases the norm
        sol = min_l2_baseline(default_dataset)
        X = default_dataset.inputs
        for _ in range(10):
            z = rng.standard_normal(default_dataset.d)
            null_part = z - X.T @ np.linalg.solve(X @ X.T, X @ z)
            if np.linalg.norm(null_part) < 1e-10:
                continue
            assert np.linalg.norm(sol.w + null_part) > np.linalg.norm(sol.w)
            # and the solution is orthogonal to the null space
            assert abs(float(sol.w @ null_part)) <= 1e-8 * np.linalg.norm(sol.w) * np.linalg.norm(null_part)

    def test_square_full_rank_unique(self, rng):
        X = rng.standard_normal((6, 6)) + np.eye(6) * 3.0
        w_true = rng.standard_normal(6)
        data = RegressionDataset(X, X @ w_true, w_true, np.zeros(6), 1.0, 0, 1)
        sol = min_l2_baseline(data)
        np.testing.assert_allclose(sol.w, w_true, rtol=1e-8, atol=1e-10)


class TestMinL1:
    def test_matches_brute_force_on_tiny_instances(self):
        for seed in range(8):
            data = _tiny_dataset(seed)
            sol = min_l1_baseline(data, tol=1e-11)
            assert sol.converged
            _, oracle_obj = brute_force_min_l1(data.inputs, data.targets)
            obj = float(np.abs(sol.w).sum())
            assert obj == pytest.approx(oracle_obj, rel=1e-6, abs=1e-8)

    def test_zero_targets(self):
        X = np.random.default_rng(0).standard_normal((4, 8))
        data = RegressionDataset(X, np.zeros(4), np.zeros(8), np.zeros(8), 1.0, 0, 1)
        sol = min_l1_baseline(data)
        np.testing.assert_allclose(sol.w, np.zeros(8), atol=1e-9)

    def test_reference_dataset_near_sparse_recovery(self, default_dataset):
        # the planted coefficient vector is itself feasible with l1 norm sqrt(5)
        sol = min_l1_baseline(default_dataset)
        assert sol.converged
        assert float(np.abs(sol.w).sum()) <= math.sqrt(5.0) + 1e-6
        assert sol.test_loss < 1e-8

    def test_feasibility(self, default_dataset):
        sol = min_l1_baseline(default_dataset)
        resid = np.linalg.norm(default_dataset.inputs @ sol.w - default_dataset.targets)
        assert resid <= 1e-8 * np.linalg.norm(default_dataset.targets)

    def test_max_iters_flagged(self, default_dataset):
        sol = min_l1_baseline(default_dataset, tol=1e-14, max_iters=10)
        assert not sol.converged

    def test_cross_norm_inequalities(self, default_dataset):
        l1 = min_l1_baseline(default_dataset)
        l2 = min_l2_baseline(default_dataset)
        assert np.abs(l1.w).sum() <= np.abs(l2.w).sum() + 1e-9
        assert np.linalg.norm(l2.w) <= np.linalg.norm(l1.w) + 1e-9
