"""Parameterized stage costs theta' phi(x, u) and final costs h(x).

A FeatureCost bundles the stage feature map phi, its Jacobians, and the
final cost h with its gradient.  The total cost of a trajectory is

    J(u_{0:T}, theta) = sum_{t=0..T} theta' phi(x_t, u_t) + h(x_{T+1})

which is affine in theta with slope feature_totals(traj).
"""

from __future__ import annotations

import numpy as np

from .dynamics import Trajectory, quat_to_rotation

__all__ = [
    "FeatureCost",
    "PendulumCost",
    "ArmCost",
    "QuadrotorCost",
    "stage_features",
    "total_cost",
    "final_cost_gradient",
    "feature_totals",
]


class FeatureCost:
    """Stage feature map phi(x, u) -> R^r plus a final cost h(x)."""

    feature_dim: int
    state_dim: int
    input_dim: int

    def features(self, x, u) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def feature_jac_x(self, x, u) -> np.ndarray:
        """d phi / d x, shape (r, n)."""
        raise NotImplementedError  # pragma: no cover

    def feature_jac_u(self, x, u) -> np.ndarray:
        """d phi / d u, shape (r, m)."""
        raise NotImplementedError  # pragma: no cover

    def final_cost(self, x) -> float:  # pragma: no cover - abstract
        raise NotImplementedError

    def final_cost_gradient(self, x) -> np.ndarray:  # pragma: no cover
        raise NotImplementedError

    def features_batch(self, states, controls) -> np.ndarray:
        """Stage features along a batch of points, shape (N, r)."""
        states = np.asarray(states, dtype=float)
        controls = np.asarray(controls, dtype=float)
        out = np.empty((states.shape[0], self.feature_dim))
        for t in range(states.shape[0]):
            out[t] = self.features(states[t], controls[t])
        return out

    def feature_jacobians_batch(self, states, controls) -> tuple[np.ndarray, np.ndarray]:
        """Feature Jacobians along a batch, shapes (N, r, n) and (N, r, m)."""
        states = np.asarray(states, dtype=float)
        controls = np.asarray(controls, dtype=float)
        N = states.shape[0]
        Jx = np.empty((N, self.feature_dim, self.state_dim))
        Ju = np.empty((N, self.feature_dim, self.input_dim))
        for t in range(N):
            Jx[t] = self.feature_jac_x(states[t], controls[t])
            Ju[t] = self.feature_jac_u(states[t], controls[t])
        return Jx, Ju

    def _check(self, x, u):
        x = np.asarray(x, dtype=float).reshape(-1)
        u = np.asarray(u, dtype=float).reshape(-1)
        if x.shape != (self.state_dim,) or u.shape != (self.input_dim,):
            raise ValueError(
                f"expected state ({self.state_dim},) and input ({self.input_dim},), "
                f"got {x.shape} and {u.shape}"
            )
        return x, u


class PendulumCost(FeatureCost):
    """phi = [a^2, a, a_dot^2, u^2]; h = 10 (a - pi)^2 + 10 a_dot^2."""

    feature_dim = 4
    state_dim = 2
    input_dim = 1

    def features(self, x, u):
        x, u = self._check(x, u)
        return np.array([x[0] ** 2, x[0], x[1] ** 2, u[0] ** 2])

    def feature_jac_x(self, x, u):
        x, u = self._check(x, u)
        return np.array([[2 * x[0], 0.0], [1.0, 0.0], [0.0, 2 * x[1]], [0.0, 0.0]])

    def feature_jac_u(self, x, u):
        x, u = self._check(x, u)
        return np.array([[0.0], [0.0], [0.0], [2 * u[0]]])

    def features_batch(self, states, controls):
        a, ad, u = states[:, 0], states[:, 1], controls[:, 0]
        return np.stack([a**2, a, ad**2, u**2], axis=1)

    def feature_jacobians_batch(self, states, controls):
        N = states.shape[0]
        Jx = np.zeros((N, 4, 2))
        Jx[:, 0, 0] = 2 * states[:, 0]
        Jx[:, 1, 0] = 1.0
        Jx[:, 2, 1] = 2 * states[:, 1]
        Ju = np.zeros((N, 4, 1))
        Ju[:, 3, 0] = 2 * controls[:, 0]
        return Jx, Ju

    def final_cost(self, x):
        return 10.0 * (x[0] - np.pi) ** 2 + 10.0 * x[1] ** 2

    def final_cost_gradient(self, x):
        return np.array([20.0 * (x[0] - np.pi), 20.0 * x[1]])


class ArmCost(FeatureCost):
    """phi = [q1^2, q1, q2^2, q2, |u|^2] for the two-link arm.

    h = w ((q1 - q1*)^2 + (q2 - q2*)^2 + dq1^2 + dq2^2) drives the arm to
    reach and stop at a target joint configuration (default upright,
    w = 100).
    """

    feature_dim = 5
    state_dim = 4
    input_dim = 2

    def __init__(self, target=(np.pi / 2, 0.0), final_weight=100.0):
        self.target = np.asarray(target, dtype=float)
        self.final_weight = float(final_weight)

    def features(self, x, u):
        x, u = self._check(x, u)
        return np.array([x[0] ** 2, x[0], x[1] ** 2, x[1], u @ u])

    def feature_jac_x(self, x, u):
        x, u = self._check(x, u)
        J = np.zeros((5, 4))
        J[0, 0] = 2 * x[0]
        J[1, 0] = 1.0
        J[2, 1] = 2 * x[1]
        J[3, 1] = 1.0
        return J

    def feature_jac_u(self, x, u):
        x, u = self._check(x, u)
        J = np.zeros((5, 2))
        J[4] = 2 * u
        return J

    def features_batch(self, states, controls):
        q1, q2 = states[:, 0], states[:, 1]
        return np.stack(
            [q1**2, q1, q2**2, q2, np.einsum("ni,ni->n", controls, controls)], axis=1
        )

    def feature_jacobians_batch(self, states, controls):
        N = states.shape[0]
        Jx = np.zeros((N, 5, 4))
        Jx[:, 0, 0] = 2 * states[:, 0]
        Jx[:, 1, 0] = 1.0
        Jx[:, 2, 1] = 2 * states[:, 1]
        Jx[:, 3, 1] = 1.0
        Ju = np.zeros((N, 5, 2))
        Ju[:, 4, :] = 2 * controls
        return Jx, Ju

    def final_cost(self, x):
        dq = np.array([x[0] - self.target[0], x[1] - self.target[1], x[2], x[3]])
        return self.final_weight * (dq @ dq)

    def final_cost_gradient(self, x):
        return 2.0 * self.final_weight * np.array(
            [x[0] - self.target[0], x[1] - self.target[1], x[2], x[3]]
        )


class QuadrotorCost(FeatureCost):
    """phi = [rx^2, rx, ry^2, ry, rz^2, rz, |u|^2] for the quadrotor.

    h penalizes distance to the landing target, residual velocity, attitude
    error against the target quaternion, and body rates:

        h = |r - r*|^2 + 10 |v|^2 + 100 e(q, q*) + 10 |w|^2

    with e the half-trace attitude error.  The attitude term is written
    directly in the quaternion components so that its gradient is smooth in
    the free 4-vector; radial components are annihilated downstream by the
    renormalizing step Jacobian.
    """

    feature_dim = 7
    state_dim = 13
    input_dim = 4

    def __init__(self, target_position=(8.0, 8.0, 0.0),
                 target_quaternion=(1.0, 0.0, 0.0, 0.0),
                 weights=(1.0, 10.0, 100.0, 10.0)):
        self.target_position = np.asarray(target_position, dtype=float)
        self.target_quaternion = np.asarray(target_quaternion, dtype=float)
        self.weights = tuple(float(w) for w in weights)
        self._Rt = quat_to_rotation(self.target_quaternion)

    def features(self, x, u):
        x, u = self._check(x, u)
        rx, ry, rz = x[0], x[1], x[2]
        return np.array([rx**2, rx, ry**2, ry, rz**2, rz, u @ u])

    def feature_jac_x(self, x, u):
        x, u = self._check(x, u)
        J = np.zeros((7, 13))
        for i, xi in enumerate(x[:3]):
            J[2 * i, i] = 2 * xi
            J[2 * i + 1, i] = 1.0
        return J

    def feature_jac_u(self, x, u):
        x, u = self._check(x, u)
        J = np.zeros((7, 4))
        J[6] = 2 * u
        return J

    def features_batch(self, states, controls):
        rx, ry, rz = states[:, 0], states[:, 1], states[:, 2]
        uu = np.einsum("ni,ni->n", controls, controls)
        return np.stack([rx**2, rx, ry**2, ry, rz**2, rz, uu], axis=1)

    def feature_jacobians_batch(self, states, controls):
        N = states.shape[0]
        Jx = np.zeros((N, 7, 13))
        for i in range(3):
            Jx[:, 2 * i, i] = 2 * states[:, i]
            Jx[:, 2 * i + 1, i] = 1.0
        Ju = np.zeros((N, 7, 4))
        Ju[:, 6, :] = 2 * controls
        return Jx, Ju

    def _attitude_error(self, q):
        return 0.5 * np.trace(np.eye(3) - self._Rt.T @ quat_to_rotation(q))

    def final_cost(self, x):
        wr, wv, wq, ww = self.weights
        dr = x[0:3] - self.target_position
        return (
            wr * (dr @ dr)
            + wv * (x[3:6] @ x[3:6])
            + wq * self._attitude_error(x[6:10])
            + ww * (x[10:13] @ x[10:13])
        )

    def final_cost_gradient(self, x):
        wr, wv, wq, ww = self.weights
        g = np.zeros(13)
        g[0:3] = 2.0 * wr * (x[0:3] - self.target_position)
        g[3:6] = 2.0 * wv * x[3:6]
        g[6:10] = wq * self._attitude_error_gradient(x[6:10])
        g[10:13] = 2.0 * ww * x[10:13]
        return g

    def _attitude_error_gradient(self, q):
        # e = 1/2 tr(I - Rt' R(q)); de/dq_i = -1/2 tr(Rt' dR/dq_i)
        w, x, y, z = q
        dR = _rotation_derivatives(w, x, y, z)
        return np.array([-0.5 * np.sum(self._Rt * dR[i]) for i in range(4)])


def _rotation_derivatives(w, x, y, z):
    """Component derivatives of the quaternion-to-DCM quadratic formula."""
    dRw = 2.0 * np.array([[0, -z, y], [z, 0, -x], [-y, x, 0]], dtype=float)
    dRx = 2.0 * np.array([[0, y, z], [y, -2 * x, -w], [z, w, -2 * x]], dtype=float)
    dRy = 2.0 * np.array([[-2 * y, x, w], [x, 0, z], [-w, z, -2 * y]], dtype=float)
    dRz = 2.0 * np.array([[-2 * z, -w, x], [w, -2 * z, y], [x, y, 0]], dtype=float)
    return dRw, dRx, dRy, dRz


def stage_features(cost: FeatureCost, x, u) -> np.ndarray:
    return cost.features(x, u)


def final_cost_gradient(cost: FeatureCost, x_final) -> np.ndarray:
    return cost.final_cost_gradient(np.asarray(x_final, dtype=float))


def feature_totals(cost: FeatureCost, traj: Trajectory) -> np.ndarray:
    """Sum of stage features over t = 0..T."""
    phi = cost.features_batch(traj.states[:-1], traj.controls)
    return phi.sum(axis=0)


def total_cost(cost: FeatureCost, traj: Trajectory, theta) -> float:
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.shape != (cost.feature_dim,):
        raise ValueError(
            f"theta must have shape ({cost.feature_dim},), got {theta.shape}"
        )
    return float(feature_totals(cost, traj) @ theta + cost.final_cost(traj.states[-1]))
