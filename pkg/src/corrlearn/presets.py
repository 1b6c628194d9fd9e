"""Task presets: system, feature cost, horizon, initial state and weight box.

Presets are addressable by name from the CLI and the game service:

    pendulum        swing-up benchmark, T=30, box [0, 5]^4
    arm             two-link reach benchmark, T=50, box [0, 4]^5
    arm_game        keyboard-taught arm with a workspace obstacle
    quadrotor_game  keyboard-taught 6-DoF quadrotor with a gate
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import Pendulum, Quadrotor, SystemModel, TwoLinkArm
from .objective import ArmCost, FeatureCost, PendulumCost, QuadrotorCost
from .polytope import BoxBounds

__all__ = ["TaskPreset", "get_preset", "PRESET_NAMES"]


@dataclass(frozen=True)
class TaskPreset:
    name: str
    system: SystemModel
    cost: FeatureCost
    horizon: int
    x0: np.ndarray
    bounds: BoxBounds
    theta_star: np.ndarray | None = None
    initial_controls: np.ndarray | None = None
    scene: dict = field(default_factory=dict)

    @property
    def feature_dim(self) -> int:
        return self.cost.feature_dim


def _pendulum() -> TaskPreset:
    return TaskPreset(
        name="pendulum",
        system=Pendulum(gravity=10.0, length=1.0, mass=1.0, damping=0.1, dt=0.2),
        cost=PendulumCost(),
        horizon=30,
        x0=np.zeros(2),
        bounds=BoxBounds(lower=np.zeros(4), upper=np.full(4, 5.0)),
        theta_star=np.full(4, 0.5),
    )


def _arm() -> TaskPreset:
    return TaskPreset(
        name="arm",
        system=TwoLinkArm(dt=0.2),
        cost=ArmCost(target=(np.pi / 2, 0.0), final_weight=100.0),
        horizon=50,
        x0=np.zeros(4),
        bounds=BoxBounds(lower=np.zeros(5), upper=np.full(5, 4.0)),
        theta_star=np.ones(5),
    )


def _arm_game() -> TaskPreset:
    # Obstacle placed on the sweep of the uncorrected arm; rendering and
    # the scripted smoke test use it, the learner never sees it.
    return TaskPreset(
        name="arm_game",
        system=TwoLinkArm(dt=0.2),
        cost=ArmCost(target=(np.pi / 2, 0.0), final_weight=100.0),
        horizon=50,
        x0=np.array([-np.pi / 2, 0.0, 0.0, 0.0]),
        bounds=BoxBounds(
            lower=np.array([0.0, -3.0, 0.0, -3.0, 0.0]),
            upper=np.array([1.0, 3.0, 1.0, 3.0, 0.5]),
        ),
        scene={
            "link_lengths": [1.0, 1.0],
            "obstacle": {"center": [1.55, 0.5], "radius": 0.3},
            "target_joint_angles": [np.pi / 2, 0.0],
        },
    )


def _quadrotor_game() -> TaskPreset:
    system = Quadrotor(mass=1.0, gravity=10.0, wing_length=1.0, torque_const=0.1, dt=0.1)
    x0 = np.zeros(13)
    x0[0:3] = [-8.0, -8.0, 5.0]
    x0[6] = 1.0
    hover = np.full((51, 4), system.mass * system.gravity / 4.0)
    return TaskPreset(
        name="quadrotor_game",
        system=system,
        cost=QuadrotorCost(
            target_position=(8.0, 8.0, 0.0),
            target_quaternion=(1.0, 0.0, 0.0, 0.0),
            weights=(1.0, 10.0, 100.0, 10.0),
        ),
        horizon=50,
        x0=x0,
        bounds=BoxBounds(
            lower=np.array([0.0, -8.0, 0.0, -8.0, 0.0, -8.0, 0.0]),
            upper=np.array([1.0, 8.0, 1.0, 8.0, 1.0, 8.0, 0.5]),
        ),
        initial_controls=hover,
        scene={
            "gate": {"center": [0.0, 0.0, 4.0], "half_width": 1.5, "half_height": 1.5},
            "target_position": [8.0, 8.0, 0.0],
            "start_position": [-8.0, -8.0, 5.0],
        },
    )


_FACTORIES = {
    "pendulum": _pendulum,
    "arm": _arm,
    "arm_game": _arm_game,
    "quadrotor_game": _quadrotor_game,
}

PRESET_NAMES = tuple(_FACTORIES)


def get_preset(name: str) -> TaskPreset:
    if name not in _FACTORIES:
        raise KeyError(f"unknown preset {name!r}; expected one of {PRESET_NAMES}")
    return _FACTORIES[name]()
