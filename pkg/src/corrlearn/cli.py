"""Command-line driver for the benchmark experiments.

Experiments:

    pendulum            oracle-corrected swing-up weights (box [0,5]^4)
    arm                 oracle-corrected two-link reach (box [0,4]^5)
    compare             pendulum, proposed vs. co-active baseline on a
                        shared correction schedule
    arm_scripted        replay the recorded arm-game key script headless
    quadrotor_scripted  replay the recorded quadrotor-game key script

Each run writes history.json, convergence.csv and summary.json into the
output directory.  CSV output is deterministic for a fixed seed: timing is
reported only in summary.json and history.json, never in the CSV.
Verbosity via the CORRLEARN_LOG environment variable (debug/info/warning).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from .game_service import arm_clears_obstacle, run_scripted_session
from .learner import (
    LearnerConfig,
    OracleSource,
    RunHistory,
    max_iterations,
    run_coactive,
    run_learning,
)
from .polytope import from_box, mve_center
from .presets import get_preset
from .trajopt import PlanOptions

__all__ = ["ExperimentSpec", "run_experiment", "main"]

logger = logging.getLogger("corrlearn.cli")

EXPERIMENTS = ("pendulum", "arm", "compare", "arm_scripted", "quadrotor_scripted")

ARM_GAME_SCRIPT = {
    1: [{"type": "key", "keys": ["left"], "t": 11}],
    2: [{"type": "key", "keys": ["left"], "t": 16}],
    3: [{"type": "key", "keys": ["down"], "t": 34}],
}

QUADROTOR_GAME_SCRIPT = {
    1: [
        {"type": "key", "keys": ["up"], "t": 8},
        {"type": "key", "keys": ["up"], "t": 20},
    ],
    2: [{"type": "key", "keys": ["down"], "t": 14}],
    4: [{"type": "key", "keys": ["s"], "t": 13}],
    5: [{"type": "key", "keys": ["s"], "t": 19}],
}


@dataclass
class ExperimentSpec:
    experiment: str
    seed: int = 0
    epsilon: float = 0.1
    center: str = "mve"
    out_dir: str = "results"
    theta_star: np.ndarray | None = None
    max_iters: int | None = None
    volume_samples: int = 0
    coactive_alpha: float = 0.0006

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(
                f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}"
            )
        if self.theta_star is not None:
            self.theta_star = np.asarray(self.theta_star, dtype=float).reshape(-1)


def _csv_cell(value) -> str:
    if value is None:
        return ""
    return repr(float(value))


def _history_csv(history: RunHistory) -> str:
    lines = ["k,e_theta,vol_estimate,t_k,correction_dir"]
    for rec in history.records:
        t_k = "|".join(str(c.time) for c in rec.corrections)
        dirs = "|".join(
            ";".join(repr(float(v)) for v in c.direction) for c in rec.corrections
        )
        lines.append(
            f"{rec.k},{_csv_cell(rec.e_theta)},{_csv_cell(rec.volume_estimate)},"
            f"{t_k},{dirs}"
        )
    return "\n".join(lines) + "\n"


def _write(out_dir: str, name: str, text: str):
    with open(os.path.join(out_dir, name), "w") as fh:
        fh.write(text)


def run_experiment(spec: ExperimentSpec) -> int:
    """Run one experiment, write its artifacts, return an exit status."""
    os.makedirs(spec.out_dir, exist_ok=True)
    started = time.perf_counter()
    try:
        if spec.experiment in ("pendulum", "arm"):
            summary = _run_oracle_benchmark(spec)
        elif spec.experiment == "compare":
            summary = _run_compare(spec)
        else:
            summary = _run_scripted(spec)
    except Exception as exc:  # solver failure or violated assumption
        logger.error("experiment failed: %s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    summary["wall_time_s"] = round(time.perf_counter() - started, 3)
    _write(spec.out_dir, "summary.json", json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary, indent=2))
    return 0


def _learner_config(spec: ExperimentSpec, theta_star) -> LearnerConfig:
    return LearnerConfig(
        epsilon=spec.epsilon,
        center=spec.center,
        seed=spec.seed,
        theta_star=theta_star,
        volume_samples=spec.volume_samples,
        max_iterations_override=spec.max_iters,
        plan_options=PlanOptions(),
    )


def _run_oracle_benchmark(spec: ExperimentSpec) -> dict:
    preset = get_preset(spec.experiment)
    theta_star = spec.theta_star if spec.theta_star is not None else preset.theta_star
    config = _learner_config(spec, theta_star)
    source = OracleSource(theta_star, seed=spec.seed,
                          satisfied_tolerance=config.satisfied_tolerance)
    history = run_learning(preset, None, source, config)
    _write(spec.out_dir, "history.json", json.dumps(history.to_dict()) + "\n")
    _write(spec.out_dir, "convergence.csv", _history_csv(history))
    bound = max_iterations(preset.feature_dim, preset.bounds.radius_bound, spec.epsilon)
    return {
        "experiment": spec.experiment,
        "seed": spec.seed,
        "epsilon": spec.epsilon,
        "center": spec.center,
        "iterations": len(history.records),
        "iteration_bound": bound,
        "stop_reason": history.stop_reason,
        "final_e_theta": history.final_e_theta,
        "final_theta": history.final_theta.tolist(),
    }


def _run_compare(spec: ExperimentSpec) -> dict:
    preset = get_preset("pendulum")
    theta_star = spec.theta_star if spec.theta_star is not None else preset.theta_star
    config = _learner_config(spec, theta_star)
    source = OracleSource(theta_star, seed=spec.seed,
                          satisfied_tolerance=config.satisfied_tolerance)
    proposed = run_learning(preset, None, source, config)
    schedule = [rec.corrections for rec in proposed.records]
    theta0 = mve_center(from_box(preset.bounds)).center
    baseline = run_coactive(preset, theta0, schedule, alpha=spec.coactive_alpha,
                            theta_star=theta_star)
    _write(spec.out_dir, "history.json", json.dumps(
        {"proposed": proposed.to_dict(), "baseline": baseline.to_dict()}) + "\n")
    _write(spec.out_dir, "convergence.csv", _history_csv(proposed))
    _write(spec.out_dir, "baseline.csv", _history_csv(baseline))
    return {
        "experiment": "compare",
        "seed": spec.seed,
        "alpha": spec.coactive_alpha,
        "proposed_final_e_theta": proposed.final_e_theta,
        "baseline_final_e_theta": baseline.final_e_theta,
        "baseline_stop_reason": baseline.stop_reason,
        "proposed_below_baseline":
            bool(proposed.final_e_theta < baseline.final_e_theta),
    }


def _run_scripted(spec: ExperimentSpec) -> dict:
    if spec.experiment == "arm_scripted":
        game, script = "arm_game", ARM_GAME_SCRIPT
        preset = get_preset(game)
        stop = lambda s: s.k > max(script) and arm_clears_obstacle(  # noqa: E731
            s.traj.states, preset.scene
        )
    else:
        game, script = "quadrotor_game", QUADROTOR_GAME_SCRIPT
        stop = None
    log, session = run_scripted_session(
        game, script, max_iterations=spec.max_iters or 10,
        stop_when=stop, seed=spec.seed,
    )
    _write(spec.out_dir, "history.json", json.dumps(log) + "\n")
    thetas = [m for m in log if m["type"] == "plan"]
    lines = ["k,theta"]
    for m in thetas:
        lines.append(f"{m['k']},{';'.join(repr(v) for v in m['theta'])}")
    _write(spec.out_dir, "convergence.csv", "\n".join(lines) + "\n")
    summary = {
        "experiment": spec.experiment,
        "game": game,
        "iterations": session.k,
        "phase": session.phase,
        "final_theta": None if session.theta is None else list(session.theta),
    }
    if game == "arm_game":
        summary["obstacle_cleared"] = bool(
            session.traj is not None
            and arm_clears_obstacle(session.traj.states, get_preset(game).scene)
        )
    return summary


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="corrlearn", description="directional-correction learning experiments"
    )
    parser.add_argument("--experiment", required=True, choices=EXPERIMENTS)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--epsilon", type=float, default=0.1)
    parser.add_argument("--center", default="mve",
                        choices=("mve", "analytic", "chebyshev"))
    parser.add_argument("--out", default="results", metavar="DIR")
    parser.add_argument("--theta-star", default=None,
                        help="comma-separated override of the true weights")
    parser.add_argument("--max-iters", type=int, default=None)
    parser.add_argument("--volume-samples", type=int, default=0,
                        help="Monte-Carlo samples per iteration (0 = off)")
    parser.add_argument("--alpha", type=float, default=0.0006,
                        help="co-active baseline step size (compare only)")
    args = parser.parse_args(argv)

    level = os.environ.get("CORRLEARN_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))

    theta_star = None
    if args.theta_star:
        theta_star = np.array([float(v) for v in args.theta_star.split(",")])
    spec = ExperimentSpec(
        experiment=args.experiment,
        seed=args.seed,
        epsilon=args.epsilon,
        center=args.center,
        out_dir=args.out,
        theta_star=theta_star,
        max_iters=args.max_iters,
        volume_samples=args.volume_samples,
        coactive_alpha=args.alpha,
    )
    return run_experiment(spec)


if __name__ == "__main__":
    raise SystemExit(main())
