import json

import numpy as np
import pytest

from corrlearn.dynamics import (
    DivergentRolloutError,
    Pendulum,
    Quadrotor,
    Trajectory,
    TwoLinkArm,
    attitude_error,
    linearize,
    quat_to_rotation,
    rollout,
    system_from_config,
    thrust_to_wrench,
)

from conftest import ScalarIntegrator, fd_jacobians

ALL_SYSTEMS = [Pendulum(), TwoLinkArm(), Quadrotor()]


def random_state(system, rng):
    x = rng.normal(size=system.state_dim)
    if isinstance(system, Quadrotor):
        x[6:10] /= np.linalg.norm(x[6:10])
    return x


class TestStep:
    def test_pendulum_equilibrium(self):
        assert np.allclose(Pendulum().step([0.0, 0.0], [0.0]), [0.0, 0.0])

    def test_pendulum_horizontal_release(self):
        # alpha'' = -10 sin(pi/2) = -10; one Euler step with dt = 0.2
        x = Pendulum().step([np.pi / 2, 0.0], [0.0])
        assert np.allclose(x, [np.pi / 2, -2.0], atol=1e-12)

    def test_quadrotor_hover_balance(self):
        q = Quadrotor()
        x0 = np.zeros(13)
        x0[6] = 1.0
        x1 = q.step(x0, [q.mass * q.gravity / 4] * 4)
        assert np.allclose(x1[3:6], 0.0, atol=1e-12)

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            Pendulum().step([0.0, 0.0, 0.0], [0.0])
        with pytest.raises(ValueError):
            Pendulum().step([0.0, 0.0], [0.0, 0.0])

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            Pendulum().step([np.nan, 0.0], [0.0])


class TestRollout:
    def test_pendulum_stays_at_equilibrium(self):
        traj = rollout(Pendulum(), [0.0, 0.0], np.zeros((31, 1)))
        assert traj.states.shape == (32, 2)
        assert np.allclose(traj.states, 0.0)

    def test_state_count_is_controls_plus_one(self):
        traj = rollout(TwoLinkArm(), np.zeros(4), np.zeros((51, 2)))
        assert traj.states.shape[0] == 52
        assert traj.horizon == 50

    def test_quadrotor_quaternions_stay_unit(self):
        rng = np.random.default_rng(0)
        q = Quadrotor()
        x0 = np.zeros(13)
        x0[6] = 1.0
        traj = rollout(q, x0, rng.uniform(0.0, 5.0, size=(40, 4)))
        norms = np.linalg.norm(traj.states[:, 6:10], axis=1)
        assert np.abs(norms - 1.0).max() <= 1e-12

    @pytest.mark.parametrize("system", ALL_SYSTEMS, ids=lambda s: s.name)
    def test_rollout_consistency(self, system):
        rng = np.random.default_rng(1)
        x0 = random_state(system, rng)
        controls = rng.normal(scale=0.5, size=(12, system.input_dim))
        traj = rollout(system, x0, controls)
        for t in range(12):
            resid = traj.states[t + 1] - system.step(traj.states[t], controls[t])
            assert np.linalg.norm(resid) <= 1e-9

    def test_divergence_detected(self):
        # unit-feedback-free arm with enormous torque overflows quickly
        with pytest.raises(DivergentRolloutError):
            rollout(TwoLinkArm(), np.zeros(4), np.full((60, 2), 1e154))

    def test_trajectory_shape_validation(self):
        with pytest.raises(ValueError):
            Trajectory(states=np.zeros((5, 2)), controls=np.zeros((5, 1)))


class TestLinearize:
    def test_scalar_linear_system(self):
        A, B = linearize(ScalarIntegrator(), np.array([3.0]), np.array([-1.0]))
        assert np.allclose(A, [[1.0]]) and np.allclose(B, [[1.0]])

    def test_pendulum_gravity_row(self):
        # continuous d(alpha'')/d(alpha) = -g/l = -10 at the origin;
        # the Euler step scales it by dt
        A, _ = linearize(Pendulum(), np.zeros(2), np.zeros(1))
        assert np.isclose(A[1, 0], 0.2 * -10.0)

    @pytest.mark.parametrize("system", ALL_SYSTEMS, ids=lambda s: s.name)
    def test_matches_finite_differences(self, system):
        rng = np.random.default_rng(2)
        worst = 0.0
        for _ in range(100):
            x = random_state(system, rng)
            u = rng.normal(size=system.input_dim)
            A, B = system.jacobians(x, u)
            A_fd, B_fd = fd_jacobians(system, x, u)
            scale = max(1.0, np.abs(A_fd).max(), np.abs(B_fd).max())
            worst = max(
                worst,
                np.abs(A - A_fd).max() / scale,
                np.abs(B - B_fd).max() / scale,
            )
        assert worst <= 1e-5

    @pytest.mark.parametrize("system", ALL_SYSTEMS, ids=lambda s: s.name)
    def test_batch_matches_pointwise(self, system):
        rng = np.random.default_rng(3)
        states = np.stack([random_state(system, rng) for _ in range(7)])
        controls = rng.normal(size=(7, system.input_dim))
        A, B = system.batch_jacobians(states, controls)
        for t in range(7):
            At, Bt = system.jacobians(states[t], controls[t])
            assert np.allclose(A[t], At, atol=1e-14)
            assert np.allclose(B[t], Bt, atol=1e-14)


class TestThrustToWrench:
    def test_symmetric_thrusts_cancel_torque(self):
        f, tau = thrust_to_wrench([2.5, 2.5, 2.5, 2.5], 1.0, 0.1)
        assert f == pytest.approx(10.0)
        assert np.allclose(tau, 0.0)

    def test_roll_pair(self):
        f, tau = thrust_to_wrench([0.0, 1.0, 0.0, -1.0], 1.0, 0.1)
        assert f == pytest.approx(0.0)
        assert np.allclose(tau, [-1.0, 0.0, 0.0])

    def test_pitch_pair(self):
        f, tau = thrust_to_wrench([1.0, 0.0, -1.0, 0.0], 1.0, 0.1)
        assert f == pytest.approx(0.0)
        assert np.allclose(tau, [0.0, -1.0, 0.0])


class TestAttitudeError:
    def test_zero_iff_equal(self):
        q = np.array([0.5, 0.5, 0.5, 0.5])
        assert attitude_error(q, q) == pytest.approx(0.0, abs=1e-12)

    def test_half_turn_about_x(self):
        assert attitude_error([0, 1, 0, 0], [1, 0, 0, 0]) == pytest.approx(2.0)

    def test_double_cover_invariance(self):
        rng = np.random.default_rng(4)
        q = rng.normal(size=4)
        q /= np.linalg.norm(q)
        target = np.array([1.0, 0.0, 0.0, 0.0])
        assert attitude_error(q, target) == pytest.approx(
            attitude_error(-q, target), abs=1e-12
        )

    def test_non_unit_rejected(self):
        with pytest.raises(ValueError):
            attitude_error([1.1, 0, 0, 0], [1, 0, 0, 0])


def test_angular_momentum_conserved_with_unit_inertia():
    q = Quadrotor()
    x = np.zeros(13)
    x[6] = 1.0
    x[10:13] = [0.4, -0.2, 0.7]
    momentum0 = np.linalg.norm(q.inertia @ x[10:13])
    for _ in range(50):
        x = q.step(x, np.zeros(4))
    assert np.linalg.norm(q.inertia @ x[10:13]) == pytest.approx(momentum0, rel=1e-12)


def test_rotation_matrix_is_orthogonal():
    rng = np.random.default_rng(5)
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    R = quat_to_rotation(q)
    assert np.allclose(R @ R.T, np.eye(3), atol=1e-12)
    assert np.linalg.det(R) == pytest.approx(1.0)


class TestConfigLoading:
    def test_pendulum_from_json_string(self):
        system, rest = system_from_config(
            '{"kind": "pendulum", "dt": 0.1, "gravity": 9.81, "horizon": 20}'
        )
        assert isinstance(system, Pendulum)
        assert system.dt == 0.1
        assert system.params["gravity"] == 9.81
        assert rest == {"horizon": 20}

    def test_quadrotor_from_file(self, tmp_path):
        path = tmp_path / "quad.json"
        path.write_text(json.dumps({"kind": "quadrotor", "dt": 0.05, "mass": 2.0}))
        system, _ = system_from_config(str(path))
        assert isinstance(system, Quadrotor)
        assert system.mass == 2.0

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError, match="unknown system kind"):
            system_from_config({"kind": "hovercraft"})
