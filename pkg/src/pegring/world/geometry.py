"""Desk-scale geometry of the task board."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class PegSpec:
    """One vertical peg: id is color plus index (grey pegs may repeat)."""

    peg_id: str
    color: str
    base: tuple  # (x, y, z) of the base point on the board
    height: float = 0.020
    radius: float = 0.002

    @property
    def base_point(self) -> np.ndarray:
        return np.array(self.base, dtype=float)

    @property
    def tip(self) -> np.ndarray:
        return self.base_point + np.array([0.0, 0.0, self.height])

    @property
    def axis(self) -> np.ndarray:
        return np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class GeometryConfig:
    """Board, peg layout, ring sizes and tolerances.

    The divider is the vertical plane x = 0 through the board center;
    boundary points belong to psm1.
    """

    base_size: float = 0.12
    workspace: tuple = ((-0.08, -0.08, 0.0), (0.08, 0.08, 0.15))
    pegs: tuple = ()
    ring_major_radius: float = 0.008
    ring_minor_radius: float = 0.0015
    capture_radius: float = 0.004
    threading_tol: float = 0.003
    peg_approach_offset: float = 0.015
    transfer_point: tuple = (0.0, 0.0, 0.045)

    def __post_init__(self):
        lo, hi = np.array(self.workspace[0]), np.array(self.workspace[1])
        half = self.base_size / 2
        if half > hi[0] or half > hi[1]:
            raise ValueError("base exceeds the workspace")
        for peg in self.pegs:
            p = peg.base_point
            if np.any(p[:2] < -half) or np.any(p[:2] > half):
                raise ValueError(f"peg {peg.peg_id} outside the base")
            if peg.radius >= self.ring_major_radius:
                raise ValueError("ring must fit over every peg")

    def in_workspace(self, p) -> bool:
        lo, hi = np.array(self.workspace[0]), np.array(self.workspace[1])
        p = np.asarray(p, dtype=float)
        return bool(np.all(p >= lo - 1e-12) and np.all(p <= hi + 1e-12))

    def on_base(self, p) -> bool:
        half = self.base_size / 2
        return bool(abs(p[0]) <= half and abs(p[1]) <= half)

    def pegs_of_color(self, color: str):
        return [p for p in self.pegs if p.color == color]

    def peg_by_id(self, peg_id: str) -> PegSpec:
        for p in self.pegs:
            if p.peg_id == peg_id:
                return p
        raise KeyError(peg_id)

    def peg_capacity(self) -> dict:
        caps: dict = {}
        for p in self.pegs:
            caps[p.color] = caps.get(p.color, 0) + 1
        return caps


def _mk_pegs(entries):
    counts: dict = {}
    pegs = []
    for color, x, y in entries:
        i = counts.get(color, 0)
        counts[color] = i + 1
        pegs.append(PegSpec(peg_id=f"{color}{i}", color=color, base=(x, y, 0.0)))
    return tuple(pegs)


def default_geometry(peg_entries=None) -> GeometryConfig:
    """Standard five-peg board (red/blue/grey left, yellow/green right)."""
    entries = peg_entries if peg_entries is not None else [
        ("red", -0.040, -0.030),
        ("blue", -0.040, 0.030),
        ("grey", -0.015, 0.000),
        ("yellow", 0.040, -0.030),
        ("green", 0.040, 0.030),
    ]
    return GeometryConfig(pegs=_mk_pegs(entries))
