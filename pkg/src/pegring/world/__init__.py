"""Deterministic kinematic simulation of the peg-and-ring scene."""

from .geometry import GeometryConfig, PegSpec, default_geometry
from .scene import (
    GraspFailed,
    OutOfWorkspace,
    Scene,
    arm_side,
)
from .disturbances import Disturbance
from .scenario import (
    Scenario,
    ScenarioError,
    build_scene,
    builtin_scenario,
    load_scenario,
    save_scenario,
)

__all__ = [
    "Disturbance",
    "GeometryConfig",
    "GraspFailed",
    "OutOfWorkspace",
    "PegSpec",
    "Scenario",
    "ScenarioError",
    "Scene",
    "arm_side",
    "build_scene",
    "builtin_scenario",
    "default_geometry",
    "load_scenario",
    "save_scenario",
]
