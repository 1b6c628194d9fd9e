"""Incremental learning of control objectives from directional corrections.

A correction applied during a robot's motion cuts a halfspace out of the
weight search space; recentering on the maximum-volume inscribed ellipsoid
shrinks the space geometrically until the learned weights match the
corrector's implicit cost function.
"""

from .dynamics import (
    Pendulum,
    Quadrotor,
    SystemModel,
    Trajectory,
    TwoLinkArm,
    attitude_error,
    linearize,
    rollout,
    step,
    system_from_config,
    thrust_to_wrench,
)
from .kernel import (
    Correction,
    Halfspace,
    KernelMatrices,
    correction_halfspace,
    cost_gradient,
    dense_kernel,
    recursive_kernel,
)
from .learner import (
    AssumptionViolatedError,
    InteractiveSource,
    IterationRecord,
    LearnerConfig,
    OracleSource,
    RunHistory,
    ScriptedSource,
    deform_trajectory,
    max_iterations,
    oracle_correction,
    run_coactive,
    run_learning,
)
from .objective import (
    ArmCost,
    FeatureCost,
    PendulumCost,
    QuadrotorCost,
    feature_totals,
    final_cost_gradient,
    stage_features,
    total_cost,
)
from .polytope import (
    BoxBounds,
    Ellipsoid,
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
from .presets import PRESET_NAMES, TaskPreset, get_preset
from .trajopt import PlanOptions, TrajOptError, plan

__version__ = "0.1.0"
