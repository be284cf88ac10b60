"""Single source of truth for the simulated scene.

The executor owns one Scene and mutates it through tick / attempt_grasp /
attempt_release / apply_disturbance; observers consume immutable snapshot
dicts.  Everything is deterministic: no randomness lives here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import quat
from ..planner import GroundAtom
from .disturbances import Disturbance
from .geometry import GeometryConfig, PegSpec

ARM_NAMES = ("psm1", "psm2")
HOME = {
    "psm1": np.array([-0.05, 0.0, 0.06]),
    "psm2": np.array([0.05, 0.0, 0.06]),
}


class OutOfWorkspace(Exception):
    """A commanded pose leaves the workspace box."""


@dataclass(frozen=True)
class GraspFailed:
    reason: str  # "too_far" | "disturbance" | "no_ring"

    def __str__(self) -> str:
        return self.reason


def arm_side(p) -> str:
    """Which arm's half-space a point belongs to (boundary goes to psm1)."""
    return "psm1" if p[0] <= 0.0 else "psm2"


@dataclass
class ArmState:
    name: str
    pos: np.ndarray
    q: np.ndarray
    gripper: str = "open"  # "open" | "closed"
    held: str | None = None
    # rigid attachment of the held ring, in the gripper frame
    hold_offset: np.ndarray | None = None
    hold_rel_q: np.ndarray | None = None


@dataclass
class RingState:
    color: str
    pos: np.ndarray
    q: np.ndarray
    status: str = "on_base"  # on_base | on_peg | in_hand | fallen | hidden
    peg_id: str | None = None
    holder: str | None = None


class Scene:
    def __init__(self, geometry: GeometryConfig, rings, disturbances=(),
                 time: float = 0.0):
        self.geometry = geometry
        self.time = float(time)
        self.arms = {
            name: ArmState(name=name, pos=HOME[name].copy(),
                           q=quat.pointing([0.0, 0.0, -1.0]))
            for name in ARM_NAMES
        }
        self.rings: dict[str, RingState] = {r.color: r for r in rings}
        self.occupant: dict[str, str | None] = {
            p.peg_id: None for p in geometry.pegs}
        for r in self.rings.values():
            if r.status == "on_peg" and r.peg_id is not None:
                self.occupant[r.peg_id] = r.color
        self.disturbances: list[Disturbance] = list(disturbances)
        self.armed_grasp_failures: set[str] = set()
        self.grasp_attempts: dict[tuple, int] = {}

    # -- queries -------------------------------------------------------------
    def ring_normal(self, ring: RingState) -> np.ndarray:
        return quat.rotate(ring.q, np.array([0.0, 0.0, 1.0]))

    def ring_surface_distance(self, ring: RingState, p) -> float:
        """Distance from point p to the torus surface of a ring."""
        g = self.geometry
        rel = np.asarray(p, dtype=float) - ring.pos
        n = self.ring_normal(ring)
        zeta = float(np.dot(rel, n))
        radial = rel - zeta * n
        rho = float(np.linalg.norm(radial))
        return abs(float(np.hypot(rho - g.ring_major_radius, zeta))
                   - g.ring_minor_radius)

    def threaded_peg(self, ring: RingState) -> PegSpec | None:
        """The peg this ring is physically threaded on, if any."""
        g = self.geometry
        for peg in g.pegs:
            base = peg.base_point
            lateral = float(np.hypot(ring.pos[0] - base[0], ring.pos[1] - base[1]))
            if lateral <= g.threading_tol and \
                    base[2] - 1e-9 <= ring.pos[2] <= base[2] + peg.height:
                return peg
        return None

    def peg_is_occupied(self, peg: PegSpec, ignore_ring: str | None = None) -> bool:
        for r in self.rings.values():
            if r.color == ignore_ring or r.status == "hidden":
                continue
            if self.threaded_peg(r) is not None and \
                    self.threaded_peg(r).peg_id == peg.peg_id:
                return True
        return False

    def free_pegs(self, color: str):
        return [p for p in self.geometry.pegs_of_color(color)
                if not self.peg_is_occupied(p)]

    def peg_obstacles(self, exclude=()):
        """Pegs as repulsive segment obstacles for motion generation."""
        from ..dmp import Obstacle

        out = []
        for peg in self.geometry.pegs:
            if peg.peg_id in exclude:
                continue
            out.append(Obstacle.segment(peg.base_point, peg.tip))
        return out

    # -- dynamics ------------------------------------------------------------
    def tick(self, commands: dict | None, dt: float) -> None:
        """Advance time: track commanded arm poses, fire due disturbances."""
        if dt <= 0:
            raise ValueError("dt must be positive")
        commands = commands or {}
        for name, cmd in commands.items():
            arm = self.arms[name]
            pos = np.asarray(cmd["pos"], dtype=float)
            if not np.all(np.isfinite(pos)):
                raise OutOfWorkspace(f"{name}: non-finite command")
            if not self.geometry.in_workspace(pos):
                raise OutOfWorkspace(f"{name}: command {pos} outside workspace")
            arm.pos = pos.copy()
            if "q" in cmd and cmd["q"] is not None:
                arm.q = quat.normalize(np.asarray(cmd["q"], dtype=float))
            if arm.held is not None:
                self._carry_ring(arm)
        self.time += dt
        for d in self.disturbances:
            if not d.fired and d.at_time is not None and self.time >= d.at_time:
                self.apply_disturbance(d)

    def _carry_ring(self, arm: ArmState) -> None:
        ring = self.rings[arm.held]
        ring.pos = arm.pos + quat.rotate(arm.q, arm.hold_offset)
        ring.q = quat.normalize(quat.multiply(arm.q, arm.hold_rel_q))

    def held_grasp_point(self, arm_name: str) -> np.ndarray:
        """While held, the grasp point coincides with the gripper exactly."""
        return self.arms[arm_name].pos

    def attempt_grasp(self, arm_name: str, color: str,
                      grasp_point=None):
        """Close the gripper on a ring; returns self or GraspFailed."""
        arm = self.arms[arm_name]
        if arm.gripper != "open":
            return GraspFailed("gripper_closed")
        key = (arm_name, color)
        self.grasp_attempts[key] = self.grasp_attempts.get(key, 0) + 1
        if arm_name in self.armed_grasp_failures:
            # jaws close on nothing and reopen
            self.armed_grasp_failures.discard(arm_name)
            return GraspFailed("disturbance")
        ring = self.rings.get(color)
        if ring is None or ring.status == "hidden":
            return GraspFailed("no_ring")
        if ring.status == "in_hand":
            # hand-off take: the ring is in the other gripper
            pass
        if grasp_point is not None:
            d = float(np.linalg.norm(arm.pos - np.asarray(grasp_point, dtype=float)))
        else:
            d = self.ring_surface_distance(ring, arm.pos)
        if d > self.geometry.capture_radius:
            return GraspFailed("too_far")
        arm.gripper = "closed"
        arm.held = color
        arm.hold_offset = quat.rotate(quat.conjugate(arm.q), ring.pos - arm.pos)
        arm.hold_rel_q = quat.normalize(quat.multiply(quat.conjugate(arm.q), ring.q))
        prev_holder = ring.holder
        if prev_holder is None:
            if ring.peg_id is not None:
                self.occupant[ring.peg_id] = None
            ring.status = "in_hand"
            ring.peg_id = None
            ring.holder = arm_name
        # dual hold: the ring stays attached to its first holder until release
        return self

    def attempt_release(self, arm_name: str):
        """Open the gripper; a held ring threads onto a peg or falls."""
        arm = self.arms[arm_name]
        if arm.gripper != "closed":
            raise ValueError(f"{arm_name}: release with open gripper")
        arm.gripper = "open"
        color = arm.held
        arm.held = None
        arm.hold_offset = None
        arm.hold_rel_q = None
        if color is None:
            return self
        ring = self.rings[color]
        other = self._other_holder(color, arm_name)
        if other is not None:
            # hand-off give: re-attach to the remaining holder
            ring.holder = other
            oa = self.arms[other]
            oa.hold_offset = quat.rotate(quat.conjugate(oa.q), ring.pos - oa.pos)
            oa.hold_rel_q = quat.normalize(quat.multiply(quat.conjugate(oa.q), ring.q))
            return self
        ring.holder = None
        g = self.geometry
        for peg in g.pegs:
            base = peg.base_point
            lateral = float(np.hypot(ring.pos[0] - base[0], ring.pos[1] - base[1]))
            if lateral <= g.threading_tol and ring.pos[2] >= base[2]:
                if self.peg_is_occupied(peg, ignore_ring=color):
                    self._drop(ring)  # lands on the occupant and tumbles off
                    return self
                ring.status = "on_peg"
                ring.peg_id = peg.peg_id
                ring.pos = np.array([base[0], base[1],
                                     base[2] + g.ring_minor_radius])
                ring.q = quat.IDENTITY.copy()
                self.occupant[peg.peg_id] = color
                return self
        self._drop(ring)
        return self

    def _other_holder(self, color: str, excluding: str) -> str | None:
        for name, a in self.arms.items():
            if name != excluding and a.held == color:
                return name
        return None

    def _drop(self, ring: RingState) -> None:
        ring.status = "fallen"
        ring.peg_id = None
        ring.pos = np.array([ring.pos[0], ring.pos[1],
                             self.geometry.ring_minor_radius])
        ring.q = quat.IDENTITY.copy()

    # -- disturbances ----------------------------------------------------------
    def on_action_dispatch(self, name: str, arm: str, color: str | None) -> None:
        """Fire action-phase disturbances matching a dispatched action."""
        for d in self.disturbances:
            if d.matches_action(name, arm, color):
                occ = d.on_action.get("occurrence", 1)
                seen = d.args.setdefault("_seen", 0) + 1
                d.args["_seen"] = seen
                if seen >= occ:
                    self.apply_disturbance(d)

    def apply_disturbance(self, d: Disturbance) -> None:
        if d.fired:
            return
        d.fired = True
        kind, args = d.kind, d.args
        if kind == "grasp_failure":
            self.armed_grasp_failures.add(args["arm"])
        elif kind == "move_ring":
            ring = self.rings[args["color"]]
            if ring.status == "in_hand":
                return  # cannot teleport a ring out of a gripper
            if ring.peg_id is not None:
                self.occupant[ring.peg_id] = None
            pos = args["pos"]
            ring.pos = np.array([pos[0], pos[1],
                                 self.geometry.ring_minor_radius])
            ring.q = quat.IDENTITY.copy()
            ring.status = "on_base"
            ring.peg_id = None
        elif kind == "drop_ring":
            ring = self.rings[args["color"]]
            holder = ring.holder
            if holder is not None:
                for a in self.arms.values():
                    if a.held == ring.color:
                        a.held = None
                        a.hold_offset = None
                        a.hold_rel_q = None
                ring.holder = None
            if ring.peg_id is not None:
                self.occupant[ring.peg_id] = None
                ring.peg_id = None
            self._drop(ring)
        elif kind == "occupy_peg":
            peg = self.geometry.pegs_of_color(args["peg"])[0]
            ring = self.rings[args["ring"]]
            if ring.status == "in_hand":
                return
            if ring.peg_id is not None:
                self.occupant[ring.peg_id] = None
            base = peg.base_point
            ring.pos = np.array([base[0], base[1],
                                 base[2] + self.geometry.ring_minor_radius])
            ring.q = quat.IDENTITY.copy()
            ring.status = "on_peg"
            ring.peg_id = peg.peg_id
            self.occupant[peg.peg_id] = ring.color
        elif kind == "hide_ring":
            ring = self.rings[args["color"]]
            if ring.status == "in_hand":
                return
            if ring.peg_id is not None:
                self.occupant[ring.peg_id] = None
                ring.peg_id = None
            ring.status = "hidden"
        elif kind == "reveal_ring":
            ring = self.rings[args["color"]]
            if ring.status == "hidden":
                ring.status = "on_base"

    # -- symbolic views --------------------------------------------------------
    def ring_visible(self, ring: RingState) -> bool:
        if ring.status == "hidden":
            return False
        return self.geometry.in_workspace(ring.pos)

    def reachability(self) -> set:
        """reachable/3 atoms: rings and pegs by divider side.

        Held rings are reachable by their holder; grey pegs only count
        while unoccupied (they are parking spots, useful only when free).
        """
        atoms = set()
        for ring in self.rings.values():
            if not self.ring_visible(ring):
                continue
            if ring.holder is not None:
                atoms.add(GroundAtom("reachable", (ring.holder, "ring", ring.color)))
            else:
                atoms.add(GroundAtom("reachable",
                                     (arm_side(ring.pos), "ring", ring.color)))
        for peg in self.geometry.pegs:
            if peg.color == "grey" and self.peg_is_occupied(peg):
                continue
            atoms.add(GroundAtom("reachable",
                                 (arm_side(peg.base_point), "peg", peg.color)))
        return atoms

    def goal_satisfied(self) -> bool:
        for ring in self.rings.values():
            if not self.ring_visible(ring):
                continue
            peg = self.threaded_peg(ring)
            if peg is None or peg.color != ring.color or ring.holder is not None:
                return False
        return True

    # -- snapshots ---------------------------------------------------------------
    def snapshot(self) -> dict:
        return {
            "time": round(self.time, 9),
            "arms": {
                name: {
                    "pos": [float(v) for v in a.pos],
                    "quat": [float(v) for v in a.q],
                    "gripper": a.gripper,
                    "held": a.held,
                }
                for name, a in sorted(self.arms.items())
            },
            "rings": [
                {
                    "color": r.color,
                    "pos": [float(v) for v in r.pos],
                    "quat": [float(v) for v in r.q],
                    "status": r.status,
                    "peg_id": r.peg_id,
                }
                for _, r in sorted(self.rings.items())
            ],
            "pegs": [
                {
                    "id": p.peg_id,
                    "color": p.color,
                    "base": [float(v) for v in p.base_point],
                    "height": p.height,
                    "radius": p.radius,
                    "occupant": self.occupant[p.peg_id],
                }
                for p in sorted(self.geometry.pegs, key=lambda x: x.peg_id)
            ],
            "goal": self.goal_satisfied(),
        }


def tick(scene: Scene, commands: dict | None, dt: float) -> Scene:
    scene.tick(commands, dt)
    return scene
