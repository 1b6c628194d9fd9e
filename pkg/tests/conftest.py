"""Shared fixtures and independent numerical oracles for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from corrlearn.dynamics import SystemModel
from corrlearn.objective import FeatureCost


class ScalarIntegrator(SystemModel):
    """x' = x + u, the simplest linear system."""

    state_dim = 1
    input_dim = 1
    name = "scalar"

    def __init__(self, dt=1.0):
        self.dt = float(dt)
        self._params = {"dt": self.dt}

    def _step(self, x, u):
        return x + u

    def _jacobians(self, x, u):
        return np.array([[1.0]]), np.array([[1.0]])


class ScalarQuadCost(FeatureCost):
    """phi = [x^2, u^2], zero final cost."""

    feature_dim = 2
    state_dim = 1
    input_dim = 1

    def features(self, x, u):
        return np.array([x[0] ** 2, u[0] ** 2])

    def feature_jac_x(self, x, u):
        return np.array([[2 * x[0]], [0.0]])

    def feature_jac_u(self, x, u):
        return np.array([[0.0], [2 * u[0]]])

    def final_cost(self, x):
        return 0.0

    def final_cost_gradient(self, x):
        return np.zeros(1)


def fd_jacobians(system, x, u, eps=1e-6):
    """Central finite-difference Jacobians of the step map."""
    n, m = system.state_dim, system.input_dim
    A = np.zeros((n, n))
    B = np.zeros((n, m))
    for i in range(n):
        dx = np.zeros(n)
        dx[i] = eps
        A[:, i] = (system.step(x + dx, u) - system.step(x - dx, u)) / (2 * eps)
    for i in range(m):
        du = np.zeros(m)
        du[i] = eps
        B[:, i] = (system.step(x, u + du) - system.step(x, u - du)) / (2 * eps)
    return A, B


def fd_control_gradient(system, cost, x0, controls, theta, eps=1e-6):
    """Central finite differences of the total cost over stacked controls."""
    from corrlearn.dynamics import rollout
    from corrlearn.objective import total_cost

    U = np.asarray(controls, dtype=float).reshape(-1)
    m = system.input_dim
    g = np.zeros_like(U)
    for i in range(U.size):
        up, dn = U.copy(), U.copy()
        up[i] += eps
        dn[i] -= eps
        g[i] = (
            total_cost(cost, rollout(system, x0, up.reshape(-1, m)), theta)
            - total_cost(cost, rollout(system, x0, dn.reshape(-1, m)), theta)
        ) / (2 * eps)
    return g


def riccati_controls(q, r, x0, T):
    """Optimal controls for x' = x + u with stage cost q x^2 + r u^2.

    Finite-horizon dynamic programming: V_t(x) = P_t x^2 with P_{T+1} = 0.
    """
    P = 0.0
    gains = []
    for _ in range(T + 1):
        K = P / (r + P)
        gains.append(K)
        P = q + P * (1 - K)
    gains.reverse()
    x, controls = float(x0), []
    for K in gains:
        u = -K * x
        controls.append(u)
        x = x + u
    return np.array(controls)


@pytest.fixture(scope="session")
def scalar_system():
    return ScalarIntegrator()


@pytest.fixture(scope="session")
def scalar_cost():
    return ScalarQuadCost()
