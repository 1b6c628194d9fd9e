"""Discrete-time system models: pendulum, two-link arm, 6-DoF quadrotor.

All systems integrate their continuous equations of motion with a forward
Euler step of fixed length ``dt``.  The quadrotor additionally renormalizes
its quaternion block after every step, since the raw Euler update drifts off
the unit sphere.  Every model provides analytic Jacobians of the discrete
step map, including the renormalization chain rule for the quadrotor.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SystemModel",
    "Pendulum",
    "TwoLinkArm",
    "Quadrotor",
    "Trajectory",
    "step",
    "rollout",
    "linearize",
    "thrust_to_wrench",
    "attitude_error",
    "quat_to_rotation",
    "system_from_config",
    "DivergentRolloutError",
]


class DivergentRolloutError(RuntimeError):
    """Raised when a rollout produces non-finite states."""


def _check_vector(v, dim, name):
    v = np.asarray(v, dtype=float)
    if v.shape != (dim,):
        raise ValueError(f"{name} must have shape ({dim},), got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite values")
    return v


class SystemModel:
    """Base class for discrete-time models x_{t+1} = f(x_t, u_t).

    Subclasses implement ``_step`` and ``_jacobians`` on validated arrays.
    Instances are immutable after construction and safe to share.
    """

    state_dim: int
    input_dim: int
    dt: float
    name: str = "system"

    @property
    def params(self) -> dict:
        return dict(self._params)

    def step(self, x, u) -> np.ndarray:
        x = _check_vector(x, self.state_dim, "state")
        u = _check_vector(u, self.input_dim, "input")
        return self._step(x, u)

    def jacobians(self, x, u) -> tuple[np.ndarray, np.ndarray]:
        """Jacobians (A, B) of the step map, shapes (n, n) and (n, m)."""
        x = _check_vector(x, self.state_dim, "state")
        u = _check_vector(u, self.input_dim, "input")
        A, B = self._jacobians(x, u)
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
            raise FloatingPointError("non-finite entries in Jacobians")
        return A, B

    def batch_jacobians(self, states, controls) -> tuple[np.ndarray, np.ndarray]:
        """Step Jacobians along a batch of points, shapes (N, n, n), (N, n, m)."""
        states = np.asarray(states, dtype=float)
        controls = np.asarray(controls, dtype=float)
        N = states.shape[0]
        A = np.empty((N, self.state_dim, self.state_dim))
        B = np.empty((N, self.state_dim, self.input_dim))
        for t in range(N):
            A[t], B[t] = self._jacobians(states[t], controls[t])
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
            raise FloatingPointError("non-finite entries in Jacobians")
        return A, B

    def _step(self, x, u):  # pragma: no cover - abstract
        raise NotImplementedError

    def _jacobians(self, x, u):  # pragma: no cover - abstract
        raise NotImplementedError


@dataclass(frozen=True)
class Trajectory:
    """A state sequence x_{0..T+1} paired with the controls u_{0..T}."""

    states: np.ndarray  # (T+2, n)
    controls: np.ndarray  # (T+1, m)

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        controls = np.asarray(self.controls, dtype=float)
        if controls.ndim == 1:
            controls = controls.reshape(-1, 1)
        if states.ndim != 2 or controls.ndim != 2:
            raise ValueError("states and controls must be 2-d arrays")
        if states.shape[0] != controls.shape[0] + 1:
            raise ValueError(
                f"states count {states.shape[0]} must be controls count "
                f"{controls.shape[0]} + 1"
            )
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "controls", controls)

    @property
    def horizon(self) -> int:
        """T, the index of the last control."""
        return self.controls.shape[0] - 1

    def stacked_controls(self) -> np.ndarray:
        """Controls flattened time-major into a single m(T+1)-vector."""
        return self.controls.reshape(-1)


def step(system: SystemModel, x, u) -> np.ndarray:
    return system.step(x, u)


def linearize(system: SystemModel, x, u) -> tuple[np.ndarray, np.ndarray]:
    return system.jacobians(x, u)


def rollout(system: SystemModel, x0, controls) -> Trajectory:
    """Integrate the system from x0 under a (T+1, m) control sequence."""
    controls = np.asarray(controls, dtype=float)
    if controls.ndim == 1:
        controls = controls.reshape(-1, system.input_dim)
    if controls.shape[0] < 1 or controls.shape[1] != system.input_dim:
        raise ValueError(
            f"controls must have shape (T+1, {system.input_dim}) with T >= 0"
        )
    x = _check_vector(x0, system.state_dim, "x0")
    states = np.empty((controls.shape[0] + 1, system.state_dim))
    states[0] = x
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(controls.shape[0]):
            x = system._step(states[t], controls[t])
            if not np.all(np.isfinite(x)):
                raise DivergentRolloutError(
                    f"non-finite state at step {t + 1} of rollout"
                )
            states[t + 1] = x
    return Trajectory(states=states, controls=controls)


class Pendulum(SystemModel):
    """Damped pendulum: alpha'' = -(g/l) sin(a) - d/(m l^2) a' + u/(m l^2).

    State [alpha, alpha_dot], input [torque].  alpha is measured from the
    hanging position, so alpha = pi is upright.
    """

    state_dim = 2
    input_dim = 1
    name = "pendulum"

    def __init__(self, gravity=10.0, length=1.0, mass=1.0, damping=0.1, dt=0.2):
        self.dt = float(dt)
        self._params = {
            "gravity": gravity,
            "length": length,
            "mass": mass,
            "damping": damping,
            "dt": self.dt,
        }
        self._g_over_l = gravity / length
        self._inv_ml2 = 1.0 / (mass * length**2)
        self._damp = damping * self._inv_ml2

    def _step(self, x, u):
        alpha, alpha_dot = x
        acc = -self._g_over_l * np.sin(alpha) - self._damp * alpha_dot + self._inv_ml2 * u[0]
        return np.array([alpha + self.dt * alpha_dot, alpha_dot + self.dt * acc])

    def _jacobians(self, x, u):
        alpha = x[0]
        A = np.array(
            [
                [1.0, self.dt],
                [-self.dt * self._g_over_l * np.cos(alpha), 1.0 - self.dt * self._damp],
            ]
        )
        B = np.array([[0.0], [self.dt * self._inv_ml2]])
        return A, B

    def batch_jacobians(self, states, controls):
        states = np.asarray(states, dtype=float)
        N = states.shape[0]
        A = np.zeros((N, 2, 2))
        A[:, 0, 0] = 1.0
        A[:, 0, 1] = self.dt
        A[:, 1, 0] = -self.dt * self._g_over_l * np.cos(states[:, 0])
        A[:, 1, 1] = 1.0 - self.dt * self._damp
        B = np.zeros((N, 2, 1))
        B[:, 1, 0] = self.dt * self._inv_ml2
        return A, B


class TwoLinkArm(SystemModel):
    """Planar two-link arm moving horizontally: M(q) q'' + C(q, q') q' = tau.

    Standard two-link equations with unit masses, lengths, center-of-mass
    offsets and link inertias.  State [q1, q2, q1_dot, q2_dot], input
    [tau1, tau2].  No gravity term (horizontal plane).
    """

    state_dim = 4
    input_dim = 2
    name = "arm"

    def __init__(self, dt=0.2):
        self.dt = float(dt)
        self._params = {"masses": (1.0, 1.0), "lengths": (1.0, 1.0), "inertias": (1.0, 1.0), "dt": self.dt}

    @staticmethod
    def _mass_matrix(q2):
        c2 = np.cos(q2)
        return np.array([[5.0 + 2.0 * c2, 2.0 + c2], [2.0 + c2, 2.0]])

    @staticmethod
    def _coriolis_vector(q2, dq1, dq2):
        s2 = np.sin(q2)
        return np.array([-s2 * (2.0 * dq1 * dq2 + dq2**2), s2 * dq1**2])

    def _accel(self, x, u):
        q2, dq1, dq2 = x[1], x[2], x[3]
        M = self._mass_matrix(q2)
        c = self._coriolis_vector(q2, dq1, dq2)
        return np.linalg.solve(M, u - c), M

    def _step(self, x, u):
        ddq, _ = self._accel(x, u)
        out = x + self.dt * np.concatenate([x[2:], ddq])
        return out

    def _jacobians(self, x, u):
        q2, dq1, dq2 = x[1], x[2], x[3]
        s2, c2 = np.sin(q2), np.cos(q2)
        ddq, M = self._accel(x, u)
        Minv = np.linalg.inv(M)
        dM_dq2 = np.array([[-2.0 * s2, -s2], [-s2, 0.0]])
        dc_dq2 = np.array([-c2 * (2.0 * dq1 * dq2 + dq2**2), c2 * dq1**2])
        dc_ddq = np.array(
            [[-2.0 * s2 * dq2, -2.0 * s2 * (dq1 + dq2)], [2.0 * s2 * dq1, 0.0]]
        )
        dddq_dq2 = -Minv @ (dM_dq2 @ ddq + dc_dq2)
        dddq_ddq = -Minv @ dc_ddq
        Ac = np.zeros((4, 4))
        Ac[0, 2] = 1.0
        Ac[1, 3] = 1.0
        Ac[2:, 1] = dddq_dq2
        Ac[2:, 2:] = dddq_ddq
        A = np.eye(4) + self.dt * Ac
        B = np.zeros((4, 2))
        B[2:, :] = self.dt * Minv
        return A, B

    def batch_jacobians(self, states, controls):
        states = np.asarray(states, dtype=float)
        controls = np.asarray(controls, dtype=float)
        N = states.shape[0]
        q2, dq1, dq2 = states[:, 1], states[:, 2], states[:, 3]
        s2, c2 = np.sin(q2), np.cos(q2)
        M = np.zeros((N, 2, 2))
        M[:, 0, 0] = 5.0 + 2.0 * c2
        M[:, 0, 1] = M[:, 1, 0] = 2.0 + c2
        M[:, 1, 1] = 2.0
        cvec = np.stack([-s2 * (2.0 * dq1 * dq2 + dq2**2), s2 * dq1**2], axis=1)
        Minv = np.linalg.inv(M)
        ddq = np.einsum("nij,nj->ni", Minv, controls - cvec)
        dM_dq2 = np.zeros((N, 2, 2))
        dM_dq2[:, 0, 0] = -2.0 * s2
        dM_dq2[:, 0, 1] = dM_dq2[:, 1, 0] = -s2
        dc_dq2 = np.stack([-c2 * (2.0 * dq1 * dq2 + dq2**2), c2 * dq1**2], axis=1)
        dc_ddq = np.zeros((N, 2, 2))
        dc_ddq[:, 0, 0] = -2.0 * s2 * dq2
        dc_ddq[:, 0, 1] = -2.0 * s2 * (dq1 + dq2)
        dc_ddq[:, 1, 0] = 2.0 * s2 * dq1
        rhs = np.einsum("nij,nj->ni", dM_dq2, ddq) + dc_dq2
        dddq_dq2 = -np.einsum("nij,nj->ni", Minv, rhs)
        dddq_ddq = -np.einsum("nij,njk->nik", Minv, dc_ddq)
        A = np.tile(np.eye(4), (N, 1, 1))
        A[:, 0, 2] = self.dt
        A[:, 1, 3] = self.dt
        A[:, 2:, 1] = self.dt * dddq_dq2
        A[:, 2:, 2:] += self.dt * dddq_ddq
        B = np.zeros((N, 4, 2))
        B[:, 2:, :] = self.dt * Minv
        return A, B


def thrust_to_wrench(thrusts, wing_length=1.0, torque_const=0.1):
    """Total force and body torque generated by four rotor thrusts.

    Applies the 4x4 mixing matrix: rows are total thrust, roll torque from
    the lateral rotor pair (arm l_w/2), pitch torque from the longitudinal
    pair, and yaw torque from alternating drag (constant c).
    """
    T = np.asarray(thrusts, dtype=float).reshape(4)
    half = wing_length / 2.0
    f = T.sum()
    tau = np.array(
        [
            half * (T[3] - T[1]),
            half * (T[2] - T[0]),
            torque_const * (T[0] - T[1] + T[2] - T[3]),
        ]
    )
    return f, tau


def quat_to_rotation(q) -> np.ndarray:
    """Direction cosine matrix (body to world) of a scalar-first quaternion.

    Uses the quadratic formula directly; callers are responsible for passing
    unit quaternions when a proper rotation is required.
    """
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def _quat_rate_matrix(omega) -> np.ndarray:
    """Matrix Omega(w) with q_dot = 1/2 Omega(w) q for body rates w."""
    wx, wy, wz = omega
    return np.array(
        [
            [0.0, -wx, -wy, -wz],
            [wx, 0.0, wz, -wy],
            [wy, -wz, 0.0, wx],
            [wz, wy, -wx, 0.0],
        ]
    )


def attitude_error(q, q_target) -> float:
    """Attitude error 1/2 trace(I - R(q_target)^T R(q)), zero iff equal.

    Both quaternions must be unit norm within 1e-6.  Invariant under
    negating either quaternion (double cover).
    """
    q = np.asarray(q, dtype=float).reshape(4)
    q_target = np.asarray(q_target, dtype=float).reshape(4)
    for name, quat in (("q", q), ("q_target", q_target)):
        if abs(np.linalg.norm(quat) - 1.0) > 1e-6:
            raise ValueError(f"{name} is not unit norm: |{name}| = {np.linalg.norm(quat)}")
    return 0.5 * np.trace(np.eye(3) - quat_to_rotation(q_target).T @ quat_to_rotation(q))


class Quadrotor(SystemModel):
    """6-DoF quadrotor in SE(3), state [r(3), v(3), q(4), w(3)].

    Position/velocity in the world frame, scalar-first attitude quaternion,
    angular velocity in the body frame.  Inputs are the four rotor thrusts;
    thrust_to_wrench maps them to total force (along body z) and body torque.
    The Euler step renormalizes the quaternion block.
    """

    state_dim = 13
    input_dim = 4
    name = "quadrotor"

    def __init__(self, mass=1.0, inertia=None, gravity=10.0, wing_length=1.0,
                 torque_const=0.1, dt=0.1):
        self.dt = float(dt)
        self.mass = float(mass)
        self.inertia = np.eye(3) if inertia is None else np.asarray(inertia, dtype=float)
        self.inertia_inv = np.linalg.inv(self.inertia)
        self.gravity = float(gravity)
        self.wing_length = float(wing_length)
        self.torque_const = float(torque_const)
        self._params = {
            "mass": mass,
            "inertia": self.inertia.tolist(),
            "gravity": gravity,
            "wing_length": wing_length,
            "torque_const": torque_const,
            "dt": self.dt,
        }

    def _derivative(self, x, u):
        v = x[3:6]
        q = x[6:10]
        omega = x[10:13]
        f, tau = thrust_to_wrench(u, self.wing_length, self.torque_const)
        dv = np.array([0.0, 0.0, -self.gravity]) + quat_to_rotation(q)[:, 2] * (f / self.mass)
        dq = 0.5 * _quat_rate_matrix(omega) @ q
        domega = self.inertia_inv @ (tau - np.cross(omega, self.inertia @ omega))
        return np.concatenate([v, dv, dq, domega])

    def _step(self, x, u):
        out = x + self.dt * self._derivative(x, u)
        out[6:10] /= np.linalg.norm(out[6:10])
        return out

    def _jacobians(self, x, u):
        q = x[6:10]
        omega = x[10:13]
        f, _ = thrust_to_wrench(u, self.wing_length, self.torque_const)
        w, qx, qy, qz = q

        # Jacobian of the pre-normalization Euler update
        J = np.eye(13)
        dt = self.dt
        J[0:3, 3:6] += dt * np.eye(3)
        # d(v_dot)/dq: derivative of R(q) e3 * f/m
        dRe3_dq = np.array(
            [
                [2 * qy, 2 * qz, 2 * w, 2 * qx],
                [-2 * qx, -2 * w, 2 * qz, 2 * qy],
                [0.0, -4 * qx, -4 * qy, 0.0],
            ]
        )
        J[3:6, 6:10] += dt * dRe3_dq * (f / self.mass)
        # d(q_dot)/dq and d(q_dot)/dw
        J[6:10, 6:10] += dt * 0.5 * _quat_rate_matrix(omega)
        G = np.array(
            [
                [-qx, -qy, -qz],
                [w, -qz, qy],
                [qz, w, -qx],
                [-qy, qx, w],
            ]
        )
        J[6:10, 10:13] += dt * 0.5 * G
        # d(w_dot)/dw: gyroscopic term
        Jw = self.inertia @ omega
        J[10:13, 10:13] += dt * self.inertia_inv @ (
            _skew(Jw) - _skew(omega) @ self.inertia
        )

        B = np.zeros((13, 4))
        B[3:6, :] = dt * np.outer(quat_to_rotation(q)[:, 2] / self.mass, np.ones(4))
        half = self.wing_length / 2.0
        c = self.torque_const
        mix_tau = np.array(
            [
                [0.0, -half, 0.0, half],
                [-half, 0.0, half, 0.0],
                [c, -c, c, -c],
            ]
        )
        B[10:13, :] = dt * self.inertia_inv @ mix_tau

        # Chain rule through the quaternion renormalization
        q_pre = x[6:10] + dt * 0.5 * _quat_rate_matrix(omega) @ q
        nrm = np.linalg.norm(q_pre)
        q_hat = q_pre / nrm
        D = np.eye(13)
        D[6:10, 6:10] = (np.eye(4) - np.outer(q_hat, q_hat)) / nrm
        return D @ J, D @ B

    def batch_jacobians(self, states, controls):
        states = np.asarray(states, dtype=float)
        controls = np.asarray(controls, dtype=float)
        N = states.shape[0]
        dt = self.dt
        q = states[:, 6:10]
        omega = states[:, 10:13]
        w, qx, qy, qz = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
        f = controls.sum(axis=1)

        J = np.tile(np.eye(13), (N, 1, 1))
        J[:, 0:3, 3:6] += dt * np.eye(3)

        zeros = np.zeros(N)
        dRe3 = np.empty((N, 3, 4))
        dRe3[:, 0] = np.stack([2 * qy, 2 * qz, 2 * w, 2 * qx], axis=1)
        dRe3[:, 1] = np.stack([-2 * qx, -2 * w, 2 * qz, 2 * qy], axis=1)
        dRe3[:, 2] = np.stack([zeros, -4 * qx, -4 * qy, zeros], axis=1)
        J[:, 3:6, 6:10] += dt * dRe3 * (f / self.mass)[:, None, None]

        wx, wy, wz = omega[:, 0], omega[:, 1], omega[:, 2]
        Om = np.empty((N, 4, 4))
        Om[:, 0] = np.stack([zeros, -wx, -wy, -wz], axis=1)
        Om[:, 1] = np.stack([wx, zeros, wz, -wy], axis=1)
        Om[:, 2] = np.stack([wy, -wz, zeros, wx], axis=1)
        Om[:, 3] = np.stack([wz, wy, -wx, zeros], axis=1)
        J[:, 6:10, 6:10] += dt * 0.5 * Om

        G = np.empty((N, 4, 3))
        G[:, 0] = np.stack([-qx, -qy, -qz], axis=1)
        G[:, 1] = np.stack([w, -qz, qy], axis=1)
        G[:, 2] = np.stack([qz, w, -qx], axis=1)
        G[:, 3] = np.stack([-qy, qx, w], axis=1)
        J[:, 6:10, 10:13] += dt * 0.5 * G

        Jw = omega @ self.inertia.T
        skew_Jw = _batch_skew(Jw)
        skew_w = _batch_skew(omega)
        J[:, 10:13, 10:13] += dt * np.einsum(
            "ij,njk->nik", self.inertia_inv, skew_Jw - skew_w @ self.inertia
        )

        B = np.zeros((N, 13, 4))
        Re3 = np.stack(
            [2 * (qx * qz + w * qy), 2 * (qy * qz - w * qx), 1 - 2 * (qx**2 + qy**2)],
            axis=1,
        )
        B[:, 3:6, :] = dt * Re3[:, :, None] / self.mass
        half = self.wing_length / 2.0
        c = self.torque_const
        mix_tau = np.array(
            [[0.0, -half, 0.0, half], [-half, 0.0, half, 0.0], [c, -c, c, -c]]
        )
        B[:, 10:13, :] = dt * self.inertia_inv @ mix_tau

        q_pre = q + dt * 0.5 * np.einsum("nij,nj->ni", Om, q)
        nrm = np.linalg.norm(q_pre, axis=1)
        q_hat = q_pre / nrm[:, None]
        Pq = (np.eye(4) - np.einsum("ni,nj->nij", q_hat, q_hat)) / nrm[:, None, None]
        J[:, 6:10, :] = np.einsum("nij,njk->nik", Pq, J[:, 6:10, :])
        B[:, 6:10, :] = np.einsum("nij,njk->nik", Pq, B[:, 6:10, :])
        return J, B


def _skew(v) -> np.ndarray:
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


def _batch_skew(v: np.ndarray) -> np.ndarray:
    out = np.zeros((v.shape[0], 3, 3))
    out[:, 0, 1] = -v[:, 2]
    out[:, 0, 2] = v[:, 1]
    out[:, 1, 0] = v[:, 2]
    out[:, 1, 2] = -v[:, 0]
    out[:, 2, 0] = -v[:, 1]
    out[:, 2, 1] = v[:, 0]
    return out


_SYSTEM_KINDS = {
    "pendulum": Pendulum,
    "arm": TwoLinkArm,
    "quadrotor": Quadrotor,
}

_PARAM_KEYS = {
    "pendulum": {"gravity", "length", "mass", "damping", "dt"},
    "arm": {"dt"},
    "quadrotor": {"mass", "inertia", "gravity", "wing_length", "torque_const", "dt"},
}


def system_from_config(config) -> tuple[SystemModel, dict]:
    """Build a system from a JSON config file path, JSON string, or dict.

    Schema: {"kind": "pendulum" | "arm" | "quadrotor", "dt": float,
    "horizon": int, <physical parameters by keyword>}.  Returns the system
    and the remaining entries (e.g. horizon) untouched.
    """
    if isinstance(config, str):
        try:
            config = json.loads(config)
        except json.JSONDecodeError:
            with open(config) as fh:
                config = json.load(fh)
    if "kind" not in config:
        raise ValueError("config must contain a 'kind' key")
    kind = config["kind"]
    if kind not in _SYSTEM_KINDS:
        raise ValueError(f"unknown system kind {kind!r}; expected one of {sorted(_SYSTEM_KINDS)}")
    kwargs = {k: v for k, v in config.items() if k in _PARAM_KEYS[kind]}
    rest = {k: v for k, v in config.items() if k not in _PARAM_KEYS[kind] and k != "kind"}
    return _SYSTEM_KINDS[kind](**kwargs), rest
