"""Experiment drivers: fast recurrences, scenarios, sweeps, warm starts."""

import math

import numpy as np
import pytest

from catapult_lab import theory
from catapult_lab.experiments import (
    alpha_eta_sweep,
    beta_sweep_scalar,
    generalized_sweep_simple2d,
    ldn_problem,
    run_scalar_relu,
    run_simple2d,
    scalar_relu_problem,
    scalar_run_trajectory,
    scenario_compare,
    simple2d_problem,
    warm_start_ldn,
)
from catapult_lab.models import eval_ldn, generate_sparse_regression
from catapult_lab.optim import Constant, Schedule, run
from conftest import EPSILON, ETA, STEPS, U0, V0


class TestFastRecurrences:
    def test_scalar_matches_generic_runner(self):
        prob = scalar_relu_problem()
        for beta in (0.0, 0.9):
            srun = run_scalar_relu(U0, V0, ETA, beta, 1500)
            traj = run(prob.eval_fn, [U0, V0], Schedule(Constant((1 + beta) * ETA)),
                       beta=beta, steps=1500)
            np.testing.assert_array_equal(traj.params[:, 0], srun.u)
            np.testing.assert_array_equal(traj.params[:, 1], srun.v)

    def test_simple2d_matches_generic_runner(self):
        prob = simple2d_problem()
        srun = run_simple2d(5.060, 4.950, 0.01, 0.9, 1500)
        traj = run(prob.eval_fn, [5.060, 4.950], Schedule(Constant(1.9 * 0.01)),
                   beta=0.9, steps=1500)
        np.testing.assert_array_equal(traj.params[:, 0], srun.u)
        np.testing.assert_array_equal(traj.params[:, 1], srun.v)

    def test_inline_sharpness_matches_exact_2x2(self, rng):
        from catapult_lab.spectral import sharpness_exact_2x2

        for prob in (scalar_relu_problem(), simple2d_problem()):
            for _ in range(200):
                theta = rng.uniform(-5.0, 5.0, size=2)
                exact = sharpness_exact_2x2(prob.hessian_fn(theta)).value
                assert prob.sharpness_fn(theta) == pytest.approx(exact, rel=1e-12, abs=1e-12)

    def test_trajectory_view_consistent(self, phb_run):
        traj = scalar_run_trajectory(phb_run)
        i = 5000
        u, v = phb_run.u[i], phb_run.v[i]
        assert traj.loss[i] == pytest.approx(0.5 * u * u * v * v, rel=1e-12)
        H = np.array([[v * v, 2 * u * v], [2 * u * v, u * u]])
        lam = float(np.max(np.linalg.eigvalsh(H)))
        assert traj.sharpness[i] == pytest.approx(lam, rel=1e-10)
        assert traj.mss[i] == pytest.approx(2.0 / ETA, rel=1e-12)


@pytest.fixture(scope="module")
def scalar_result():
    return scenario_compare(
        scalar_relu_problem(), np.array([U0, V0]), EPSILON, 0.9, steps=STEPS
    )


class TestScenarioCompare:
    def test_strict_ordering(self, scalar_result):
        assert scalar_result.ordering_ok(margin_frac=0.01)

    def test_matched_stability_threshold(self, scalar_result):
        for traj in scalar_result.trajectories.values():
            np.testing.assert_allclose(traj.mss, 2.0 / ETA, rtol=1e-12)

    def test_switches_fired_once(self, scalar_result):
        for name in ("gd_to_phb", "phb_to_gd"):
            sw = scalar_result.trajectories[name].meta["switch"]
            assert sw["fired"] and sw["fire_step"] is not None
        for name in ("gd", "phb"):
            assert scalar_result.trajectories[name].meta["switch"]["mode"] == "none"

    def test_switch_fires_below_threshold(self, scalar_result):
        traj = scalar_result.trajectories["gd_to_phb"]
        fire = traj.meta["switch"]["fire_step"]
        assert traj.sharpness[fire] < traj.mss[fire]
        assert traj.sharpness[0] > traj.mss[0]

    def test_beta_zero_degenerate_scenarios_identical(self):
        res = scenario_compare(
            scalar_relu_problem(), np.array([U0, V0]), EPSILON, 0.0, steps=3000
        )
        base = res.trajectories["gd"].params
        for name in ("phb", "gd_to_phb", "phb_to_gd"):
            np.testing.assert_array_equal(res.trajectories[name].params, base)


@pytest.fixture(scope="module")
def rows():
    return beta_sweep_scalar(U0, V0, ETA, [0.0, 0.2, 0.5, 0.9], 40_000)


class TestBetaSweepScalar:
    def test_bound_below_measured(self, rows):
        for r in rows:
            assert r.delta_s_bound <= r.delta_s_measured + 1e-12

    def test_beta_zero_equals_plain_gd(self, rows):
        srun = run_scalar_relu(U0, V0, ETA, 0.0, 40_000)
        assert rows[0].delta_s_measured == pytest.approx(
            U0 * U0 - float(srun.u[-1]) ** 2, rel=1e-12
        )

    def test_quantities_populated(self, rows):
        for r in rows:
            assert r.tau_u is not None and r.tau_u >= 1
            assert r.converged
            assert 0 < r.inv_factor <= 1.0
            assert r.C_v_tail_bound < 1e-6 * r.C_v


class TestGeneralizedSweepSimple2d:
    def test_bound_below_measured_and_projection(self):
        rows = generalized_sweep_simple2d(5.060, 4.950, 0.01, 0.004,
                                          [0.0, 0.5, 0.9], 50_000)
        for r in rows:
            assert r.tau_u is not None
            assert r.delta_s_bound <= r.delta_s_measured
            assert r.s0 == pytest.approx(200.4159209643785, rel=1e-9)

    def test_matches_generic_generalized_quantities(self):
        # the vectorized sweep path agrees with the callback-based general one
        eta, eps, beta = 0.01, 0.004, 0.5
        srun = run_simple2d(5.060, 4.950, eta, beta, 20_000)
        rows = generalized_sweep_simple2d(5.060, 4.950, eta, eps, [beta], 20_000)
        thetas = np.column_stack([srun.u, srun.v])

        def closest(th):
            return np.array(theory.closest_minimum_simple2d(th[0], th[1]))

        q = theory.generalized_quantities(
            thetas, closest,
            lambda s: theory.simple2d_min_sharpness(s[1]),
            lambda s: theory.simple2d_min_eigvec(s[0], s[1]),
            eta, eps, beta,
        )
        assert q.tau_u == rows[0].tau_u
        assert q.C_u == pytest.approx(rows[0].C_u, rel=1e-12)
        assert q.C_v == pytest.approx(rows[0].C_v, rel=1e-10)


class TestWarmStart:
    def test_reaches_threshold(self, default_dataset):
        state = warm_start_ldn(default_dataset, 0.1, 1e-3, 1e-3)
        assert eval_ldn(state, default_dataset).loss < 1e-3

    def test_deterministic(self, default_dataset):
        a = warm_start_ldn(default_dataset, 0.1, 1e-3, 1e-3)
        b = warm_start_ldn(default_dataset, 0.1, 1e-3, 1e-3)
        np.testing.assert_array_equal(a.u, b.u)
        np.testing.assert_array_equal(a.v, b.v)

    def test_zero_targets_immediate(self):
        rngen = np.random.default_rng(3)
        X = rngen.standard_normal((5, 6))
        from catapult_lab.models import RegressionDataset

        data = RegressionDataset(X, np.zeros(5), np.zeros(6), np.zeros(6), 1.0, 0, 1)
        state = warm_start_ldn(data, 0.0, 1e-3, 1e-3)
        np.testing.assert_array_equal(state.u, np.zeros(6))

    def test_step_cap(self, default_dataset):
        with pytest.raises(RuntimeError):
            warm_start_ldn(default_dataset, 0.1, 1e-9, 1e-12, max_steps=100)


class TestLdnScenario:
    def test_warm_started_ordering(self, default_dataset):
        state = warm_start_ldn(default_dataset, 0.1, 1e-3, 1e-3)
        prob = ldn_problem(default_dataset)
        res = scenario_compare(prob, state.as_vector(), 0.03, 0.9,
                               steps=20_000, record_every=10)
        assert res.ordering_ok(margin_frac=0.01)


@pytest.fixture(scope="module")
def tiny_sweep():
    data = generate_sparse_regression(50, 100, 5.0, 5.0, 5, seed=4)
    return alpha_eta_sweep(data, [0.16, 0.22], [0.0035], beta=0.9)


class TestAlphaEtaSweep:
    def test_grid_complete(self, tiny_sweep):
        assert len(tiny_sweep.cells) == 4  # 2 alphas x 1 eta_f x {gd, phb}
        for c in tiny_sweep.cells:
            assert not c.diverged
            assert math.isfinite(c.final_test_loss)

    def test_single_cell_consistent_with_direct_run(self, tiny_sweep):
        # rerunning one cell standalone reproduces its recorded numbers
        data = generate_sparse_regression(50, 100, 5.0, 5.0, 5, seed=4)
        again = alpha_eta_sweep(data, [0.22], [0.0035], beta=0.9, include_gd=False)
        a = tiny_sweep.cell(0.22, 0.0035, 0.9)
        b = again.cell(0.22, 0.0035, 0.9)
        assert a.final_test_loss == b.final_test_loss
        assert a.final_sharpness == b.final_sharpness
        assert a.catapult_count == b.catapult_count

    def test_alpha_bar_detects_drop(self, tiny_sweep):
        # the momentum curve is above threshold at 0.16 and plunges at 0.22
        assert tiny_sweep.alpha_bar(0.0035, 0.9) == 0.22

    def test_alpha_bar_ignores_rich_regime_start(self, tiny_sweep):
        # a curve that starts below the threshold and never comes down
        # through it has no drop locus
        from catapult_lab.experiments import SweepCell, SweepResult

        cells = [
            SweepCell(a, 0.004, 0.9, t, 0.0, 1.0, 2.0, False, 0, 10)
            for a, t in [(0.05, 0.01), (0.1, 0.05), (0.2, 0.09)]
        ]
        res = SweepResult([0.05, 0.1, 0.2], [0.004], 0.9, cells,
                          tiny_sweep.l1, tiny_sweep.l2)
        assert res.alpha_bar(0.004, 0.9) is None

    def test_cell_catapult_detected_on_drop_cell(self, tiny_sweep):
        assert tiny_sweep.cell(0.22, 0.0035, 0.9).catapult_count >= 1

    def test_parallel_merge_deterministic(self):
        data = generate_sparse_regression(50, 100, 5.0, 5.0, 5, seed=4)
        seq = alpha_eta_sweep(data, [0.16, 0.22], [0.0035], beta=0.9, threads=1)
        par = alpha_eta_sweep(data, [0.16, 0.22], [0.0035], beta=0.9, threads=2)
        for a, b in zip(seq.cells, par.cells):
            assert a == b
