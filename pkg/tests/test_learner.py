import json
import queue
import threading

import numpy as np
import pytest

from corrlearn.kernel import Correction, Halfspace, cost_gradient
from corrlearn.learner import (
    AssumptionViolatedError,
    InteractiveSource,
    LearnerConfig,
    OracleSource,
    ScriptedSource,
    deform_trajectory,
    max_iterations,
    oracle_correction,
    run_coactive,
    run_learning,
)
from corrlearn.polytope import BoxBounds, add_cut, contains, from_box, mve_center
from corrlearn.presets import get_preset
from corrlearn.trajopt import PlanOptions, plan


class TestIterationBound:
    def test_pendulum_setting(self):
        assert max_iterations(4, 5.0, 0.1) == 55

    def test_arm_setting(self):
        assert max_iterations(5, 4.0, 0.1) == 83

    def test_threshold_equal_to_radius(self):
        assert max_iterations(4, 5.0, 5.0) == 0

    def test_threshold_above_radius_rejected(self):
        with pytest.raises(ValueError):
            max_iterations(4, 5.0, 6.0)

    def test_small_dimension_rejected(self):
        with pytest.raises(ValueError):
            max_iterations(1, 5.0, 0.1)


class TestOracleCorrection:
    def test_improvement_condition_holds(self):
        preset = get_preset("pendulum")
        theta_star = np.full(4, 0.5)
        rng = np.random.default_rng(0)
        traj = plan(preset.system, preset.cost, [2.5] * 4, preset.x0, 30, PlanOptions())
        for _ in range(10):
            corr = oracle_correction(preset.system, preset.cost, traj, theta_star, rng)
            grad = cost_gradient(preset.system, preset.cost, traj, theta_star)
            assert -grad @ corr.embedded(traj.horizon) > 0
            assert set(np.unique(corr.direction)).issubset({-1.0, 0.0, 1.0})

    def test_satisfied_at_true_optimum(self):
        preset = get_preset("pendulum")
        theta_star = np.full(4, 0.5)
        traj = plan(preset.system, preset.cost, theta_star, preset.x0, 30, PlanOptions())
        rng = np.random.default_rng(1)
        assert oracle_correction(preset.system, preset.cost, traj, theta_star, rng) is None

    def test_arm_correction_has_input_dimension(self):
        preset = get_preset("arm")
        theta_star = np.ones(5)
        traj = plan(preset.system, preset.cost, [2.0] * 5, preset.x0, 50, PlanOptions())
        rng = np.random.default_rng(2)
        corr = oracle_correction(preset.system, preset.cost, traj, theta_star, rng)
        assert corr.direction.shape == (2,)
        assert 0 <= corr.time <= 50


@pytest.fixture(scope="module")
def pendulum_run():
    preset = get_preset("pendulum")
    theta_star = np.full(4, 0.5)
    config = LearnerConfig(epsilon=0.1, seed=3, theta_star=theta_star)
    history = run_learning(preset, None, OracleSource(theta_star, seed=3), config)
    return preset, theta_star, history


class TestRunLearning:
    def test_error_drops_below_threshold(self, pendulum_run):
        _, _, history = pendulum_run
        assert len(history.records) <= 55
        assert history.final_e_theta < 0.1
        errors = [r.e_theta for r in history.records]
        assert errors[0] == pytest.approx(4 * 2.0**2)  # first guess is the box center

    def test_true_weights_always_contained(self, pendulum_run):
        preset, theta_star, history = pendulum_run
        space = from_box(preset.bounds)
        for rec in history.records:
            for hs in rec.halfspaces:
                space = add_cut(space, hs)
            assert contains(space, theta_star)

    def test_cuts_pass_through_guesses(self, pendulum_run):
        _, _, history = pendulum_run
        for rec in history.records:
            for corr, hs in zip(rec.corrections, rec.halfspaces):
                resid = abs(hs.normal @ rec.theta + hs.offset)
                assert resid <= np.linalg.norm(corr.direction) * 1e-5

    def test_iteration_indices_strictly_increase(self, pendulum_run):
        _, _, history = pendulum_run
        ks = [rec.k for rec in history.records]
        assert ks == sorted(set(ks))

    def test_deterministic_given_seed(self):
        preset = get_preset("pendulum")
        theta_star = np.full(4, 0.5)

        def one_run():
            config = LearnerConfig(
                epsilon=0.1, seed=9, theta_star=theta_star, max_iterations_override=8
            )
            hist = run_learning(preset, None, OracleSource(theta_star, seed=9), config)
            return json.dumps(hist.to_dict())

        assert one_run() == one_run()

    def test_scripted_idle_iteration_repeats_guess(self):
        preset = get_preset("pendulum")
        schedule = {
            1: [Correction(direction=np.array([1.0]), time=5)],
            3: [Correction(direction=np.array([-1.0]), time=20)],
        }
        config = LearnerConfig(epsilon=0.1, seed=4, max_iterations_override=3)
        history = run_learning(preset, None, ScriptedSource(schedule, final_k=3), config)
        assert len(history.records[1].halfspaces) == 0
        assert np.allclose(history.records[1].theta, history.records[2].theta)

    def test_interactive_source_consumes_queue(self):
        preset = get_preset("pendulum")
        channel = queue.Queue()
        source = InteractiveSource(channel)

        def feed():
            channel.put([Correction(direction=np.array([1.0]), time=3)])
            channel.put([])
            channel.put(None)

        threading.Thread(target=feed, daemon=True).start()
        config = LearnerConfig(epsilon=0.1, seed=5, max_iterations_override=10)
        history = run_learning(preset, None, source, config)
        assert history.stop_reason == "satisfied"
        assert len(history.records) == 3

    def test_oracle_outside_initial_box_rejected(self):
        preset = get_preset("pendulum")
        config = LearnerConfig(epsilon=0.1, seed=6, max_iterations_override=2)
        with pytest.raises(ValueError, match="outside the initial search space"):
            run_learning(preset, None, OracleSource(np.full(4, 9.0), seed=6), config)

    def test_empty_search_space_reports_violated_assumption(self):
        preset = get_preset("pendulum")
        space = from_box(preset.bounds)
        space = add_cut(space, Halfspace(normal=np.array([1.0, 0, 0, 0]), offset=-1.0))
        space = add_cut(space, Halfspace(normal=np.array([-1.0, 0, 0, 0]), offset=2.0))
        config = LearnerConfig(epsilon=0.1, seed=6)
        with pytest.raises(AssumptionViolatedError, match="emptied"):
            run_learning(preset, space, ScriptedSource({}, final_k=5), config)

    def test_volume_estimates_recorded(self):
        preset = get_preset("pendulum")
        theta_star = np.full(4, 0.5)
        config = LearnerConfig(
            epsilon=0.1, seed=7, theta_star=theta_star,
            volume_samples=20_000, max_iterations_override=4,
        )
        history = run_learning(preset, None, OracleSource(theta_star, seed=7), config)
        assert all(r.volume_estimate is not None for r in history.records)
        vols = [r.volume_estimate for r in history.records]
        assert vols == sorted(vols, reverse=True)  # cuts never grow the space


class TestDeformTrajectory:
    def test_bump_is_smooth_and_centered(self):
        preset = get_preset("pendulum")
        traj = plan(preset.system, preset.cost, [0.5] * 4, preset.x0, 30, PlanOptions())
        corr = Correction(direction=np.array([1.0]), time=15)
        deformed = deform_trajectory(preset.system, traj, corr)
        diff = (deformed.controls - traj.controls).reshape(-1)
        assert int(np.argmax(np.abs(diff))) == corr.time
        assert np.all(diff > 0)  # the inverse second-difference kernel is positive
        second = np.diff(diff, 2)
        assert np.count_nonzero(np.abs(second) > 1e-9) == 1  # kink only at t_k

    def test_scales_linearly_with_magnitude(self):
        preset = get_preset("pendulum")
        traj = plan(preset.system, preset.cost, [0.5] * 4, preset.x0, 30, PlanOptions())
        small = deform_trajectory(
            preset.system, traj, Correction(direction=np.array([1e-9]), time=7)
        )
        assert np.abs(small.controls - traj.controls).max() <= 1e-7

    def test_deformed_trajectory_is_consistent(self):
        preset = get_preset("arm")
        traj = plan(preset.system, preset.cost, np.ones(5), preset.x0, 50, PlanOptions())
        corr = Correction(direction=np.array([0.0, 1.0]), time=12)
        deformed = deform_trajectory(preset.system, traj, corr)
        for t in range(deformed.horizon + 1):
            resid = deformed.states[t + 1] - preset.system.step(
                deformed.states[t], deformed.controls[t]
            )
            assert np.linalg.norm(resid) <= 1e-9


class TestCoactiveBaseline:
    def test_empty_schedule_leaves_theta(self):
        preset = get_preset("pendulum")
        history = run_coactive(preset, [2.5] * 4, [[], []], alpha=0.0006)
        assert np.allclose(history.final_theta, 2.5)

    def test_proposed_beats_baseline_on_shared_schedule(self):
        preset = get_preset("pendulum")
        theta_star = np.full(4, 0.5)
        config = LearnerConfig(
            epsilon=0.1, seed=8, theta_star=theta_star, max_iterations_override=25
        )
        proposed = run_learning(preset, None, OracleSource(theta_star, seed=8), config)
        schedule = [rec.corrections for rec in proposed.records]
        theta0 = mve_center(from_box(preset.bounds)).center
        baseline = run_coactive(
            preset, theta0, schedule, alpha=0.0006, theta_star=theta_star
        )
        assert proposed.final_e_theta < baseline.final_e_theta

    def test_invalid_alpha_rejected(self):
        with pytest.raises(ValueError):
            run_coactive(get_preset("pendulum"), [2.5] * 4, [], alpha=0.0)

    def test_divergence_reported_not_raised(self):
        # unlike the cutting-plane loop, nothing keeps the baseline's weights
        # in the box; a negative quadratic weight makes planning unbounded,
        # which must be reported in the history rather than raised
        preset = get_preset("pendulum")
        schedule = [
            [Correction(direction=np.array([1.0]), time=15)] for _ in range(3)
        ]
        history = run_coactive(
            preset, [-5.0, 0.5, 0.5, 0.5], schedule, alpha=0.0006,
            plan_options=PlanOptions(max_iterations=5),
        )
        assert history.stop_reason == "diverged_at_1"
        assert len(history.records) == 0
