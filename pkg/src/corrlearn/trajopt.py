"""Single-shooting trajectory optimization over the stacked control vector.

Minimizes J(u_{0:T}, theta) subject to the dynamics by rolling the controls
through the system and descending with a limited-memory quasi-Newton (BFGS
secant pairs, two-loop recursion) and a backtracking Armijo line search.
The gradient comes exactly from the kernel recursion, so the optimizer and
the cut machinery share one derivative path.

Near a minimizer the cost differences fall below the floating-point
resolution of J and sufficient-decrease tests become noise, which caps the
reachable gradient norm of a pure secant method.  A Newton-CG polish breaks
through that floor: conjugate-gradient steps on Hessian-vector products
(central differences of the exact gradient) converge quadratically and are
accepted on gradient-norm contraction instead of cost decrease.

The returned trajectory is dynamics-consistent and first-order stationary
to the requested infinity-norm tolerance; the cost is non-increasing across
accepted iterates (up to the resolution of J) and the method is fully
deterministic.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .dynamics import DivergentRolloutError, SystemModel, Trajectory, rollout
from .kernel import cost_gradient
from .objective import FeatureCost, total_cost

__all__ = ["PlanOptions", "TrajOptError", "plan"]


class TrajOptError(RuntimeError):
    """Planning failed: tolerance not reached or the cost went non-finite."""


@dataclass
class PlanOptions:
    max_iterations: int = 3000
    gradient_tolerance: float = 1e-6
    initial_controls: np.ndarray | None = None
    line_search_shrink: float = 0.5
    sufficient_decrease: float = 1e-4
    memory: int = 30

    def __post_init__(self):
        if self.gradient_tolerance <= 0:
            raise ValueError("gradient_tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not 0.0 < self.line_search_shrink < 1.0:
            raise ValueError("line_search_shrink must lie in (0, 1)")


def plan(
    system: SystemModel,
    cost: FeatureCost,
    theta,
    x0,
    horizon: int,
    opts: PlanOptions | None = None,
) -> Trajectory:
    """Plan the trajectory minimizing J(theta) from x0 over the horizon."""
    opts = opts or PlanOptions()
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if not np.all(np.isfinite(theta)):
        raise ValueError("theta must be finite")
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    m = system.input_dim
    if opts.initial_controls is not None:
        U = np.asarray(opts.initial_controls, dtype=float).reshape(-1).copy()
        if U.shape != (m * (horizon + 1),):
            raise ValueError(
                f"initial controls must have {m * (horizon + 1)} entries, got {U.shape}"
            )
    else:
        U = np.zeros(m * (horizon + 1))

    def evaluate(U_flat):
        try:
            traj = rollout(system, x0, U_flat.reshape(horizon + 1, m))
        except DivergentRolloutError:
            return np.inf, None
        J = total_cost(cost, traj, theta)
        if not np.isfinite(J):
            return np.inf, None
        return J, traj

    def gradient(traj):
        return cost_gradient(system, cost, traj, theta)

    J, traj = evaluate(U)
    if not np.isfinite(J):
        raise TrajOptError("initial controls produce a non-finite cost")
    grad = gradient(traj)

    tol = opts.gradient_tolerance
    polish_at = max(1e-3, 10.0 * tol)
    pairs: deque[tuple[np.ndarray, np.ndarray, float]] = deque(maxlen=opts.memory)
    iteration = 0
    last_polish_norm = np.inf
    while iteration < opts.max_iterations:
        grad_norm = np.abs(grad).max()
        if grad_norm <= tol:
            return traj

        # A secant phase drives the gradient into the Newton basin; the
        # polish finishes.  Retry the polish only after a decade of progress.
        want_polish = grad_norm <= polish_at and grad_norm <= 0.1 * last_polish_norm
        if want_polish:
            result = _newton_cg_polish(U, J, traj, grad, evaluate, gradient, opts)
            if result is not None:
                U, J, traj, grad = result
                if np.abs(grad).max() <= tol:
                    return traj
            last_polish_norm = grad_norm

        direction = _two_loop(grad, pairs)
        slope = grad @ direction
        if slope >= 0:  # secant model lost descent; restart from steepest
            pairs.clear()
            direction = -grad
            slope = grad @ direction

        alpha = 1.0
        accepted = False
        while alpha >= 1e-20:
            U_new = U + alpha * direction
            J_new, traj_new = evaluate(U_new)
            if J_new <= J + opts.sufficient_decrease * alpha * slope:
                accepted = True
                break
            alpha *= opts.line_search_shrink
        iteration += 1
        if not accepted:
            if pairs:
                pairs.clear()
                continue
            break  # at the resolution floor of J; leave it to the final polish

        grad_new = gradient(traj_new)
        _push_pair(pairs, U_new - U, grad_new - grad)
        U, J, traj, grad = U_new, J_new, traj_new, grad_new

    grad_norm = np.abs(grad).max()
    if grad_norm <= tol:
        return traj
    result = _newton_cg_polish(U, J, traj, grad, evaluate, gradient, opts)
    if result is not None and np.abs(result[3]).max() <= tol:
        return result[2]
    grad_norm = min(grad_norm, np.abs(result[3]).max() if result else np.inf)
    raise TrajOptError(
        f"no stationary point within {opts.max_iterations} iterations: "
        f"gradient norm {grad_norm:.3e} > tolerance {tol:.1e}"
    )


def _newton_cg_polish(U, J, traj, grad, evaluate, gradient, opts):
    """Refine to stationarity with truncated-Newton steps.

    Accepts steps on gradient-norm contraction (guarded against genuine
    cost increases), so it keeps working where cost differences are below
    float resolution.  Returns the improved (U, J, traj, grad) or None when
    no progress was possible.
    """
    noise = 1e-11 * (1.0 + abs(J))
    tol = opts.gradient_tolerance

    def grad_at(U_pt):
        _, traj_pt = evaluate(U_pt)
        return None if traj_pt is None else gradient(traj_pt)

    improved = None
    for _ in range(30):
        grad_norm = np.abs(grad).max()
        if grad_norm <= tol:
            return U, J, traj, grad
        step = _cg_direction(U, grad, grad_at)
        if step is None:
            break
        alpha = 1.0
        accepted = False
        for _ in range(12):
            U_new = U + alpha * step
            J_new, traj_new = evaluate(U_new)
            if traj_new is not None and J_new <= J + noise:
                g_new = gradient(traj_new)
                if np.abs(g_new).max() < grad_norm:
                    accepted = True
                    break
            alpha *= 0.5
        if not accepted:
            break
        U, J, traj, grad = U_new, min(J, J_new), traj_new, g_new
        improved = (U, J, traj, grad)
    return improved


def _cg_direction(U, grad, grad_at, max_iter=None):
    """Approximately solve H step = -grad with FD Hessian-vector products."""
    n = U.size
    if max_iter is None:
        max_iter = min(2 * n, 400)
    grad_2norm = np.linalg.norm(grad)
    forcing = min(0.5, np.sqrt(grad_2norm)) * grad_2norm
    scale = 1e-6 * (1.0 + np.linalg.norm(U))

    step = np.zeros(n)
    resid = -grad.copy()
    d = resid.copy()
    rs = resid @ resid
    for _ in range(max_iter):
        d_norm = np.linalg.norm(d)
        if d_norm == 0:
            break
        eps = scale / d_norm
        gp = grad_at(U + eps * d)
        gm = grad_at(U - eps * d)
        if gp is None or gm is None:
            break
        hd = (gp - gm) / (2.0 * eps)
        curvature = d @ hd
        if curvature <= 1e-14 * d_norm * d_norm:
            break  # nonpositive curvature: stop with the progress so far
        a = rs / curvature
        step += a * d
        resid -= a * hd
        rs_new = resid @ resid
        if np.sqrt(rs_new) <= forcing:
            break
        d = resid + (rs_new / rs) * d
        rs = rs_new
    if not step.any():
        return None
    return step


def _push_pair(pairs, s, y):
    sy = s @ y
    if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
        pairs.append((s, y, sy))


def _two_loop(grad: np.ndarray, pairs) -> np.ndarray:
    """L-BFGS two-loop recursion for the descent direction."""
    q = -grad.copy()
    if not pairs:
        return q
    alphas = []
    for s, y, sy in reversed(pairs):
        a = (s @ q) / sy
        alphas.append(a)
        q -= a * y
    s_last, y_last, sy_last = pairs[-1]
    q *= sy_last / (y_last @ y_last)
    for (s, y, sy), a in zip(pairs, reversed(alphas)):
        b = (y @ q) / sy
        q += (a - b) * s
    return q
