"""Scenario files: geometry, initial ring placements, disturbance script.

JSON schema (strict: unknown fields are rejected):

{
  "name": "A", "seed": 7,
  "geometry": {"base_size": 0.12, "workspace": [[...],[...]],
               "pegs": [{"color": "red", "x": -0.04, "y": -0.03}, ...]},
  "rings": [{"color": "red", "on_peg": "grey0"} |
            {"color": "yellow", "x": -0.02, "y": 0.045} |
            {"color": "blue", "x": ..., "y": ..., "hidden": true}],
  "disturbances": [{"kind": "...", "args": {...},
                    "at_time": 1.5 | "on_action": {...}}],
  "planner": {"mode": "per-step"|"per-arm", "optimize": false}
}
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import quat
from .disturbances import Disturbance
from .geometry import GeometryConfig, default_geometry, _mk_pegs
from .scene import RingState, Scene


class ScenarioError(Exception):
    """Malformed scenario file."""


@dataclass
class Scenario:
    name: str
    seed: int = 0
    geometry: GeometryConfig = field(default_factory=default_geometry)
    rings: list = field(default_factory=list)  # ring placement dicts
    disturbances: list = field(default_factory=list)
    mode: str = "per-step"
    optimize: bool = False

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "seed": self.seed,
            "geometry": {
                "base_size": self.geometry.base_size,
                "workspace": [list(self.geometry.workspace[0]),
                              list(self.geometry.workspace[1])],
                "pegs": [{"color": p.color, "x": p.base[0], "y": p.base[1]}
                         for p in self.geometry.pegs],
            },
            "rings": [dict(r) for r in self.rings],
            "disturbances": [d.to_dict() for d in self.disturbances],
            "planner": {"mode": self.mode, "optimize": self.optimize},
        }


def _check_keys(d: dict, allowed: set, where: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ScenarioError(f"unknown fields in {where}: {sorted(unknown)}")


def scenario_from_dict(data: dict) -> Scenario:
    _check_keys(data, {"name", "seed", "geometry", "rings", "disturbances",
                       "planner"}, "scenario")
    geo_d = data.get("geometry", {})
    _check_keys(geo_d, {"base_size", "workspace", "pegs"}, "geometry")
    kwargs = {}
    if "base_size" in geo_d:
        kwargs["base_size"] = float(geo_d["base_size"])
    if "workspace" in geo_d:
        lo, hi = geo_d["workspace"]
        kwargs["workspace"] = (tuple(lo), tuple(hi))
    if "pegs" in geo_d:
        entries = []
        for p in geo_d["pegs"]:
            _check_keys(p, {"color", "x", "y"}, "peg")
            entries.append((p["color"], float(p["x"]), float(p["y"])))
        kwargs["pegs"] = _mk_pegs(entries)
    else:
        kwargs["pegs"] = default_geometry().pegs
    geometry = GeometryConfig(**kwargs)

    rings = []
    for r in data.get("rings", []):
        _check_keys(r, {"color", "x", "y", "on_peg", "hidden"}, "ring")
        if "color" not in r:
            raise ScenarioError("ring entry missing color")
        rings.append(dict(r))

    disturbances = []
    for d in data.get("disturbances", []):
        try:
            disturbances.append(Disturbance.from_dict(d))
        except ValueError as e:
            raise ScenarioError(str(e)) from e

    planner = data.get("planner", {})
    _check_keys(planner, {"mode", "optimize"}, "planner")
    mode = planner.get("mode", "per-step")
    if mode not in ("per-step", "per-arm"):
        raise ScenarioError(f"unknown mode {mode!r}")

    return Scenario(
        name=str(data.get("name", "unnamed")),
        seed=int(data.get("seed", 0)),
        geometry=geometry,
        rings=rings,
        disturbances=disturbances,
        mode=mode,
        optimize=bool(planner.get("optimize", False)),
    )


def load_scenario(path) -> Scenario:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ScenarioError(f"{path}: invalid JSON: {e}") from e
    return scenario_from_dict(data)


def save_scenario(scenario: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario.to_dict(), indent=1),
                          encoding="utf-8")


def build_scene(scenario: Scenario) -> Scene:
    g = scenario.geometry
    rings = []
    for r in scenario.rings:
        color = r["color"]
        if r.get("on_peg"):
            peg = g.peg_by_id(r["on_peg"])
            base = peg.base_point
            state = RingState(
                color=color,
                pos=np.array([base[0], base[1], base[2] + g.ring_minor_radius]),
                q=quat.IDENTITY.copy(),
                status="on_peg", peg_id=peg.peg_id)
        else:
            state = RingState(
                color=color,
                pos=np.array([float(r["x"]), float(r["y"]), g.ring_minor_radius]),
                q=quat.IDENTITY.copy(),
                status="on_base")
        if r.get("hidden"):
            state.status = "hidden"
            state.peg_id = None
        rings.append(state)
    # fresh copies so one scenario can build many scenes
    dists = [Disturbance.from_dict(d.to_dict()) for d in scenario.disturbances]
    return Scene(geometry=g, rings=rings, disturbances=dists)


# -- built-in scenarios -------------------------------------------------------

def _scenario_a() -> Scenario:
    """Extraction (red on a grey peg) plus hand-off (yellow's peg across),
    with the first grasp of the yellow ring scripted to fail."""
    return Scenario(
        name="A",
        geometry=default_geometry(),
        rings=[
            {"color": "red", "on_peg": "grey0"},
            {"color": "yellow", "x": -0.020, "y": 0.045},
        ],
        disturbances=[
            Disturbance(kind="grasp_failure", args={"arm": "psm1"},
                        on_action={"name": "grasp", "arm": "psm1",
                                   "color": "yellow", "occurrence": 1}),
        ],
    )


def _scenario_b() -> Scenario:
    """Colored pegs occupied crosswise; a ring must be parked on grey first.
    The green ring is already placed and must be left alone."""
    geometry = default_geometry([
        ("red", -0.045, -0.030),
        ("yellow", -0.045, 0.030),
        ("green", -0.020, 0.045),
        ("grey", -0.015, 0.000),
    ])
    return Scenario(
        name="B",
        geometry=geometry,
        rings=[
            {"color": "red", "on_peg": "yellow0"},
            {"color": "yellow", "on_peg": "red0"},
            {"color": "green", "on_peg": "green0"},
        ],
    )


def _scenario_c() -> Scenario:
    """One independent pipeline per arm; per-arm aggregates let them overlap."""
    return Scenario(
        name="C",
        mode="per-arm",
        geometry=default_geometry(),
        rings=[
            {"color": "red", "x": -0.030, "y": 0.045},
            {"color": "green", "x": 0.030, "y": 0.045},
        ],
    )


def _scenario_complete() -> Scenario:
    """Worst case: four rings, each requiring a hand-off (2 + 2 split)."""
    geometry = default_geometry([
        ("blue", -0.040, -0.030),
        ("yellow", -0.040, 0.030),
        ("green", 0.040, -0.030),
        ("red", 0.040, 0.030),
    ])
    return Scenario(
        name="complete",
        geometry=geometry,
        rings=[
            {"color": "green", "x": -0.030, "y": -0.050},
            {"color": "red", "x": -0.030, "y": 0.050},
            {"color": "blue", "x": 0.030, "y": -0.050},
            {"color": "yellow", "x": 0.030, "y": 0.050},
        ],
    )


def _scenario_empty() -> Scenario:
    return Scenario(name="empty", geometry=default_geometry(), rings=[])


_BUILTINS = {
    "A": _scenario_a,
    "B": _scenario_b,
    "C": _scenario_c,
    "complete": _scenario_complete,
    "empty": _scenario_empty,
}


def builtin_scenario(name: str) -> Scenario:
    key = name if name in _BUILTINS else name.upper()
    if key not in _BUILTINS:
        if name.lower() in _BUILTINS:
            key = name.lower()
        else:
            raise ScenarioError(
                f"unknown scenario {name!r}; built-ins: {sorted(_BUILTINS)}")
    return _BUILTINS[key]()
