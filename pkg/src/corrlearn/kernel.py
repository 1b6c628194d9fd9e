"""Correction-to-halfspace machinery.

Given a dynamics-consistent trajectory, the matrices H1 (m(T+1) x r) and
H2 (m(T+1) x n) express the gradient of the total cost with respect to the
stacked controls as

    grad J(u_{0:T}, theta) = H1 theta + H2 grad_h(x_{T+1}).

A directional correction a at time t_k then maps to the halfspace
<h, theta> + b < 0 on the unknown weight vector, with h the transposed
t_k block of H1 applied to a and b the matching contraction of H2 with
the final-cost gradient.  Because the identity above is linear, a
trajectory that is stationary for theta_k places theta_k exactly on the
cut boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import SystemModel, Trajectory
from .objective import FeatureCost

__all__ = [
    "Correction",
    "Halfspace",
    "KernelMatrices",
    "recursive_kernel",
    "dense_kernel",
    "cost_gradient",
    "correction_halfspace",
]


@dataclass(frozen=True)
class Correction:
    """An input-space direction applied at one time step of the horizon.

    Only the direction matters; the magnitude carries no information.
    """

    direction: np.ndarray  # (m,)
    time: int

    def __post_init__(self):
        direction = np.asarray(self.direction, dtype=float).reshape(-1)
        if not np.any(direction):
            raise ValueError("correction direction must be nonzero")
        if self.time < 0:
            raise ValueError("correction time must be >= 0")
        object.__setattr__(self, "direction", direction)
        object.__setattr__(self, "time", int(self.time))

    def embedded(self, horizon: int) -> np.ndarray:
        """Sparse embedding into the stacked control space R^{m(T+1)}."""
        m = self.direction.shape[0]
        out = np.zeros(m * (horizon + 1))
        out[self.time * m : (self.time + 1) * m] = self.direction
        return out


@dataclass(frozen=True)
class Halfspace:
    """The inequality <normal, theta> + offset < 0."""

    normal: np.ndarray  # (r,)
    offset: float

    def __post_init__(self):
        normal = np.asarray(self.normal, dtype=float).reshape(-1)
        if not np.any(normal):
            raise ValueError("halfspace normal must be nonzero")
        object.__setattr__(self, "normal", normal)
        object.__setattr__(self, "offset", float(self.offset))

    def normalized(self) -> "Halfspace":
        scale = np.linalg.norm(self.normal)
        return Halfspace(self.normal / scale, self.offset / scale)

    def residual(self, theta) -> float:
        return float(self.normal @ np.asarray(theta, dtype=float) + self.offset)


@dataclass(frozen=True)
class KernelMatrices:
    H1: np.ndarray  # (m(T+1), r)
    H2: np.ndarray  # (m(T+1), n)


def _trajectory_jacobians(system: SystemModel, cost: FeatureCost, traj: Trajectory):
    """Step and feature Jacobians along the trajectory.

    Returns (A, B, Jx, Ju) with A[t], B[t] the step Jacobians at
    (x_t, u_t) for t = 0..T and Jx[t], Ju[t] the feature Jacobians there.
    """
    A, B = system.batch_jacobians(traj.states[:-1], traj.controls)
    Jx, Ju = cost.feature_jacobians_batch(traj.states[:-1], traj.controls)
    return A, B, Jx, Ju


def recursive_kernel(system: SystemModel, cost: FeatureCost, traj: Trajectory) -> KernelMatrices:
    """Build H1, H2 by the forward recursion, one block row group per step.

    Avoids assembling and inverting the nT x nT stacked dynamics matrix.
    """
    T = traj.horizon
    if T < 1:
        raise ValueError("recursive kernel requires horizon T >= 1")
    A, B, Jx, Ju = _trajectory_jacobians(system, cost, traj)
    n, m, r = system.state_dim, system.input_dim, cost.feature_dim

    H1 = np.empty((m * (T + 1), r))
    H2 = np.empty((m * (T + 1), n))
    H1[:m] = B[0].T @ Jx[1].T + Ju[0].T
    H2[:m] = B[0].T @ A[1].T
    rows = m
    for t in range(1, T):
        H1[rows : rows + m] = B[t].T @ Jx[t + 1].T + Ju[t].T
        H2[rows : rows + m] = B[t].T @ A[t + 1].T
        H1[:rows] += H2[:rows] @ Jx[t + 1].T
        H2[:rows] = H2[:rows] @ A[t + 1].T
        rows += m
    H1[rows:] = Ju[T].T
    H2[rows:] = B[T].T
    return KernelMatrices(H1=H1, H2=H2)


def dense_kernel(system: SystemModel, cost: FeatureCost, traj: Trajectory) -> KernelMatrices:
    """Reference construction via the explicit stacked matrices.

    Assembles F_x (nT x nT, unit upper block triangular), F_u, Phi_x,
    Phi_u and V and solves against F_x.  Quadratic memory in T; intended
    as a small-horizon oracle for the recursion.
    """
    T = traj.horizon
    if T < 1:
        raise ValueError("dense kernel requires horizon T >= 1")
    n, m, r = system.state_dim, system.input_dim, cost.feature_dim
    A, B, Jx, Ju = _trajectory_jacobians(system, cost, traj)

    Fx = np.eye(n * T)
    for t in range(1, T):
        Fx[(t - 1) * n : t * n, t * n : (t + 1) * n] = -A[t].T
    Fu = np.zeros((m * T, n * T))
    for t in range(T):
        Fu[t * m : (t + 1) * m, t * n : (t + 1) * n] = B[t].T
    Phi_x = np.vstack([Jx[t].T for t in range(1, T + 1)])
    Phi_u = np.vstack([Ju[t].T for t in range(T)])
    V = np.zeros((n * T, n))
    V[(T - 1) * n :, :] = A[T].T

    try:
        Fx_inv_Phi_x = np.linalg.solve(Fx, Phi_x)
        Fx_inv_V = np.linalg.solve(Fx, V)
    except np.linalg.LinAlgError as exc:  # unreachable for unit-triangular Fx
        raise RuntimeError(f"stacked dynamics factorization failed: {exc}") from exc

    H1 = np.vstack([Fu @ Fx_inv_Phi_x + Phi_u, Ju[T].T])
    H2 = np.vstack([Fu @ Fx_inv_V, B[T].T])
    return KernelMatrices(H1=H1, H2=H2)


def cost_gradient(system: SystemModel, cost: FeatureCost, traj: Trajectory, theta) -> np.ndarray:
    """Gradient of J(u_{0:T}, theta) with respect to the stacked controls."""
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.shape != (cost.feature_dim,):
        raise ValueError(
            f"theta must have shape ({cost.feature_dim},), got {theta.shape}"
        )
    mats = recursive_kernel(system, cost, traj)
    grad_h = cost.final_cost_gradient(traj.states[-1])
    return mats.H1 @ theta + mats.H2 @ grad_h


def correction_halfspace(
    system: SystemModel,
    cost: FeatureCost,
    traj: Trajectory,
    corr: Correction,
    matrices: KernelMatrices | None = None,
) -> Halfspace:
    """The cut <h, theta> + b < 0 induced by one directional correction.

    Only the m rows of H1/H2 at the correction's block contribute; the
    returned cut is unnormalized so that residual identities against the
    stacked-control gradient hold verbatim.
    """
    T = traj.horizon
    m = system.input_dim
    if corr.direction.shape != (m,):
        raise ValueError(
            f"correction direction must have shape ({m},), got {corr.direction.shape}"
        )
    if corr.time > T:
        raise ValueError(f"correction time {corr.time} exceeds horizon {T}")
    mats = matrices if matrices is not None else recursive_kernel(system, cost, traj)
    rows = slice(corr.time * m, (corr.time + 1) * m)
    h = mats.H1[rows].T @ corr.direction
    b = corr.direction @ (mats.H2[rows] @ cost.final_cost_gradient(traj.states[-1]))
    return Halfspace(normal=h, offset=b)
