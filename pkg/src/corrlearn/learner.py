"""The incremental learning loop: plan, correct, cut, recenter.

Each iteration plans a trajectory under the current weight guess (the
center of the shrinking search space), obtains one or more directional
corrections, converts each into a halfspace cut, and intersects.  With
center-of-MVE guesses the search-space volume contracts by at least
(1 - 1/r) per cut, which yields the closed-form iteration bound used for
termination.

Correction sources: a simulated oracle that differentiates the true cost
along the current trajectory and returns sign directions at a random time
step, a scripted schedule (for replaying recorded sessions), and a
queue-backed interactive source for live play.
"""

from __future__ import annotations

import math
import queue
from dataclasses import dataclass, field, replace

import numpy as np

from .dynamics import SystemModel, Trajectory
from .kernel import Correction, Halfspace, correction_halfspace, cost_gradient, recursive_kernel
from .objective import FeatureCost, feature_totals
from .polytope import (
    EmptyInteriorError,
    SearchSpace,
    add_cut,
    analytic_center,
    chebyshev_center,
    contains,
    estimate_volume,
    from_box,
    mve_center,
    prune_redundant,
)
from .presets import TaskPreset
from .trajopt import PlanOptions, TrajOptError, plan

__all__ = [
    "LearnerConfig",
    "IterationRecord",
    "RunHistory",
    "AssumptionViolatedError",
    "OracleSource",
    "ScriptedSource",
    "InteractiveSource",
    "max_iterations",
    "oracle_correction",
    "run_learning",
    "deform_trajectory",
    "run_coactive",
]

CENTER_STRATEGIES = ("mve", "analytic", "chebyshev")


class AssumptionViolatedError(RuntimeError):
    """The search space emptied: some correction contradicted the others."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history


def max_iterations(r: int, R: float, epsilon: float) -> int:
    """Iteration bound K = ceil(r log(R/eps) / -log(1 - 1/r)).

    The smallest iteration count guaranteeing the terminal volume condition
    under the per-cut contraction factor (1 - 1/r).
    """
    if r < 2:
        raise ValueError("bound requires weight dimension r >= 2")
    if epsilon <= 0 or epsilon > R:
        raise ValueError("threshold must satisfy 0 < epsilon <= R")
    value = r * math.log(R / epsilon) / (-math.log(1.0 - 1.0 / r))
    return math.ceil(value - 1e-12)


@dataclass
class LearnerConfig:
    epsilon: float = 0.1
    center: str = "mve"
    seed: int = 0
    plan_options: PlanOptions = field(default_factory=PlanOptions)
    theta_star: np.ndarray | None = None
    volume_samples: int = 0
    satisfied_tolerance: float = 1e-4
    max_iterations_override: int | None = None

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.center not in CENTER_STRATEGIES:
            raise ValueError(f"center must be one of {CENTER_STRATEGIES}")
        if self.theta_star is not None:
            self.theta_star = np.asarray(self.theta_star, dtype=float).reshape(-1)


@dataclass
class IterationRecord:
    k: int
    theta: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    corrections: list[Correction]
    halfspaces: list[Halfspace]
    e_theta: float | None = None
    volume_estimate: float | None = None
    volume_std: float | None = None

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "theta": self.theta.tolist(),
            "states": self.states.tolist(),
            "controls": self.controls.tolist(),
            "corrections": [
                {"direction": c.direction.tolist(), "time": c.time}
                for c in self.corrections
            ],
            "halfspaces": [
                {"normal": h.normal.tolist(), "offset": h.offset}
                for h in self.halfspaces
            ],
            "e_theta": self.e_theta,
            "volume_estimate": self.volume_estimate,
            "volume_std": self.volume_std,
        }


@dataclass
class RunHistory:
    task: str
    records: list[IterationRecord]
    stop_reason: str
    final_theta: np.ndarray
    search_space: SearchSpace

    @property
    def final_e_theta(self) -> float | None:
        for record in reversed(self.records):
            if record.e_theta is not None:
                return record.e_theta
        return None

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "stop_reason": self.stop_reason,
            "final_theta": self.final_theta.tolist(),
            "records": [r.to_dict() for r in self.records],
            "search_space": self.search_space.to_dict(),
        }


class OracleSource:
    """Simulated corrector that knows the true weight vector.

    Differentiates the true cost along the robot's current trajectory and
    answers with the negated sign of the gradient block at a uniformly
    random time step.  Answers None once the trajectory is stationary for
    the true weights (nothing left to correct).
    """

    def __init__(self, theta_star, seed=0, satisfied_tolerance=1e-4):
        self.theta_star = np.asarray(theta_star, dtype=float).reshape(-1)
        self.rng = np.random.default_rng(seed)
        self.satisfied_tolerance = satisfied_tolerance

    def corrections(self, k, traj, system, cost):
        corr = oracle_correction(
            system, cost, traj, self.theta_star, self.rng, self.satisfied_tolerance
        )
        return None if corr is None else [corr]


class ScriptedSource:
    """Replays a fixed schedule: iteration index -> list of corrections.

    Iterations missing from the schedule get no corrections (the search
    space stays put); after final_k the source reports satisfaction.
    """

    def __init__(self, schedule: dict[int, list[Correction]], final_k: int | None = None):
        self.schedule = dict(schedule)
        self.final_k = final_k if final_k is not None else (
            max(self.schedule) if self.schedule else 0
        )

    def corrections(self, k, traj, system, cost):
        if k > self.final_k:
            return None
        return list(self.schedule.get(k, []))


class InteractiveSource:
    """Consumes correction batches from a queue, one batch per iteration.

    Each queue item is a list of Correction values (possibly empty) or None
    to report the trajectory satisfactory.  Producers run on another thread
    of control; the learner blocks between replanning cycles only.
    """

    def __init__(self, channel: "queue.Queue | None" = None):
        self.channel = channel if channel is not None else queue.Queue()

    def corrections(self, k, traj, system, cost):
        return self.channel.get()


def oracle_correction(
    system: SystemModel,
    cost: FeatureCost,
    traj: Trajectory,
    theta_star,
    rng: np.random.Generator,
    satisfied_tolerance: float = 1e-4,
) -> Correction | None:
    """One sign-of-true-gradient correction at a random time step.

    Returns None when the trajectory is already stationary under the true
    weights, or when every sampled gradient block vanishes (sign(0) = 0)
    after horizon+1 redraws.
    """
    theta_star = np.asarray(theta_star, dtype=float).reshape(-1)
    grad = cost_gradient(system, cost, traj, theta_star)
    if np.abs(grad).max() <= satisfied_tolerance:
        return None
    T = traj.horizon
    m = system.input_dim
    for _ in range(T + 1):
        t_k = int(rng.integers(0, T + 1))
        block = grad[t_k * m : (t_k + 1) * m]
        direction = -np.sign(block)
        if np.any(direction):
            return Correction(direction=direction, time=t_k)
    return None


def _center(space: SearchSpace, strategy: str) -> np.ndarray:
    if strategy == "mve":
        return mve_center(space).center
    if strategy == "analytic":
        return analytic_center(space)
    if strategy == "chebyshev":
        return chebyshev_center(space)[0]
    raise ValueError(f"unknown center strategy {strategy!r}")


def run_learning(
    preset: TaskPreset,
    omega0: SearchSpace | None,
    source,
    config: LearnerConfig,
) -> RunHistory:
    """Run the cutting-plane learning loop to the iteration bound.

    Stops early when the source reports the trajectory satisfactory.  A
    halfspace is added per correction; the iteration counter advances once
    per replanning cycle even when a playback carries several corrections.
    Raises AssumptionViolatedError (with the partial history attached) if
    the cuts empty the search space.
    """
    space = omega0 if omega0 is not None else from_box(preset.bounds)
    system, cost = preset.system, preset.cost
    r = cost.feature_dim
    oracle_target = getattr(source, "theta_star", None)
    if oracle_target is not None and not contains(space, oracle_target):
        raise ValueError(
            "the oracle's true weight vector lies outside the initial search space"
        )
    K = config.max_iterations_override
    if K is None:
        K = max_iterations(r, space.box.radius_bound, config.epsilon)

    records: list[IterationRecord] = []
    stop_reason = "max_iterations"
    prev_controls = preset.initial_controls
    theta = None
    for k in range(1, K + 1):
        try:
            theta = _center(space, config.center)
        except EmptyInteriorError as exc:
            cut_no = len(space.cuts)
            raise AssumptionViolatedError(
                f"search space emptied after cut {cut_no} (iteration {k - 1}): {exc}",
                history=RunHistory(preset.name, records, "assumption_violated",
                                   records[-1].theta if records else np.zeros(r), space),
            ) from exc
        opts = replace(config.plan_options, initial_controls=prev_controls)
        traj = plan(system, cost, theta, preset.x0, preset.horizon, opts)
        prev_controls = traj.controls

        result = source.corrections(k, traj, system, cost)
        e_theta = None
        if config.theta_star is not None:
            e_theta = float(np.sum((theta - config.theta_star) ** 2))

        if result is None:
            records.append(
                IterationRecord(k, theta, traj.states, traj.controls, [], [],
                                e_theta=e_theta)
            )
            stop_reason = "satisfied"
            break

        halfspaces = []
        if result:
            mats = recursive_kernel(system, cost, traj)
            for corr in result:
                hs = correction_halfspace(system, cost, traj, corr, matrices=mats)
                halfspaces.append(hs)
                space = add_cut(space, hs)
            if len(space.cuts) > 10 * r:
                space = prune_redundant(space)

        vol_est = vol_std = None
        if config.volume_samples > 0:
            vol_est, vol_std = estimate_volume(
                space, config.volume_samples,
                seed=np.random.default_rng([config.seed, k]),
            )
        records.append(
            IterationRecord(k, theta, traj.states, traj.controls, list(result),
                            halfspaces, e_theta=e_theta,
                            volume_estimate=vol_est, volume_std=vol_std)
        )

    final_theta = records[-1].theta if records else theta
    return RunHistory(preset.name, records, stop_reason, final_theta, space)


def deform_trajectory(system: SystemModel, traj: Trajectory, corr: Correction) -> Trajectory:
    """Smoothly spread a correction over the controls and re-roll the states.

    The deformation adds the solution of the second-difference system
    M ubar = abar to the controls: a piecewise-linear bump peaking at the
    correction time.  States are regenerated from the dynamics, so the
    result is consistent.
    """
    from .dynamics import rollout

    T = traj.horizon
    m = system.input_dim
    if corr.time > T:
        raise ValueError(f"correction time {corr.time} exceeds horizon {T}")
    N = T + 1
    D = 2.0 * np.eye(N) - np.eye(N, k=1) - np.eye(N, k=-1)
    M = np.kron(D, np.eye(m))
    shift = np.linalg.solve(M, corr.embedded(T))
    new_controls = traj.stacked_controls() + shift
    return rollout(system, traj.states[0], new_controls.reshape(N, m))


def run_coactive(
    preset: TaskPreset,
    theta0,
    schedule: list[list[Correction]],
    alpha: float,
    plan_options: PlanOptions | None = None,
    theta_star=None,
) -> RunHistory:
    """Feature-difference baseline: theta += alpha (phi(deformed) - phi(planned)).

    Replays a fixed correction schedule (one list per iteration).  Reports
    divergence (non-finite weights or planner failure) in the stop reason
    instead of raising; the history keeps every completed iteration.
    """
    if alpha <= 0:
        raise ValueError("step size alpha must be positive")
    system, cost = preset.system, preset.cost
    theta = np.asarray(theta0, dtype=float).reshape(-1)
    theta_star = None if theta_star is None else np.asarray(theta_star, dtype=float)
    opts = plan_options or PlanOptions()
    records: list[IterationRecord] = []
    stop_reason = "schedule_exhausted"
    prev_controls = preset.initial_controls
    for k, corrections in enumerate(schedule, start=1):
        try:
            traj = plan(system, cost, theta, preset.x0, preset.horizon,
                        replace(opts, initial_controls=prev_controls))
        except (TrajOptError, FloatingPointError, ValueError):
            stop_reason = f"diverged_at_{k}"
            break
        prev_controls = traj.controls
        e_theta = None
        if theta_star is not None:
            e_theta = float(np.sum((theta - theta_star) ** 2))
        records.append(
            IterationRecord(k, theta.copy(), traj.states, traj.controls,
                            list(corrections), [], e_theta=e_theta)
        )
        base_features = feature_totals(cost, traj)
        for corr in corrections:
            deformed = deform_trajectory(system, traj, corr)
            theta = theta + alpha * (feature_totals(cost, deformed) - base_features)
        if not np.all(np.isfinite(theta)):
            stop_reason = f"diverged_at_{k}"
            break

    final_theta = records[-1].theta if records else theta
    return RunHistory(preset.name, records, stop_reason, final_theta,
                      from_box(preset.bounds))
