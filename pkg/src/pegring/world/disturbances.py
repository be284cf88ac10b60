"""Scripted and interactive disturbances."""

from __future__ import annotations

from dataclasses import dataclass, field

KINDS = ("move_ring", "drop_ring", "occupy_peg", "hide_ring", "reveal_ring",
         "grasp_failure")


@dataclass
class Disturbance:
    """A one-shot world perturbation.

    Triggered either at a simulation time (`at_time`) or when a matching
    action is dispatched for the n-th time (`on_action`, e.g.
    {"name": "grasp", "arm": "psm1", "color": "yellow", "occurrence": 1}).
    """

    kind: str
    args: dict = field(default_factory=dict)
    at_time: float | None = None
    on_action: dict | None = None
    fired: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown disturbance kind {self.kind!r}")
        if (self.at_time is None) == (self.on_action is None):
            raise ValueError("exactly one of at_time / on_action required")

    def matches_action(self, name: str, arm: str, color: str | None) -> bool:
        if self.fired or self.on_action is None:
            return False
        spec = self.on_action
        if spec.get("name") != name:
            return False
        if spec.get("arm") is not None and spec["arm"] != arm:
            return False
        if spec.get("color") is not None and spec["color"] != color:
            return False
        return True

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "args": dict(self.args)}
        if self.at_time is not None:
            d["at_time"] = self.at_time
        if self.on_action is not None:
            d["on_action"] = dict(self.on_action)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Disturbance":
        known = {"kind", "args", "at_time", "on_action"}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown disturbance fields: {sorted(unknown)}")
        return cls(kind=d["kind"], args=dict(d.get("args", {})),
                   at_time=d.get("at_time"), on_action=d.get("on_action"))
