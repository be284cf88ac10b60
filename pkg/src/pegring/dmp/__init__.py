"""Dynamic movement primitives: learning, generalization and integration."""

from .basis import MollifierBasis
from .canonical import CanonicalSystem
from .model import (
    DegenerateGoal,
    DmpModel,
    RotoDilatation,
    generalize,
    load_model,
    rotoscale,
    save_model,
)
from .learn import (
    DegenerateDemo,
    RankDeficient,
    TrajectorySample,
    learn,
    load_demo_csv,
    resample_demo,
    save_demo_csv,
)
from .integrate import DmpState, NonFiniteState, integrate_step, quaternion_step, rollout
from .obstacles import Obstacle, obstacle_gradient, potential

__all__ = [
    "CanonicalSystem",
    "DegenerateDemo",
    "DegenerateGoal",
    "DmpModel",
    "DmpState",
    "MollifierBasis",
    "NonFiniteState",
    "Obstacle",
    "RankDeficient",
    "RotoDilatation",
    "TrajectorySample",
    "generalize",
    "integrate_step",
    "learn",
    "load_demo_csv",
    "load_model",
    "obstacle_gradient",
    "potential",
    "quaternion_step",
    "resample_demo",
    "rollout",
    "rotoscale",
    "save_demo_csv",
    "save_model",
]
