"""Situation awareness: observations to atoms, live targets, failures.

The layer between perception and the task planner.  It grounds external
atoms from pose observations, computes the live target poses the motion
layer chases (grasp point, peg approach, hand-off point), and watches each
executing action for its specific failure condition, emitting explainable
failure events that trigger replanning.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import quat
from .planner import GroundAtom
from .world.geometry import GeometryConfig
from .world.scene import arm_side


class StalePegs(Exception):
    """Peg observations drifted from the frozen initial estimate."""


class DegenerateRing(Exception):
    """Ring points are collinear; no plane normal exists."""


@dataclass(frozen=True)
class PegObservation:
    peg_id: str
    color: str
    base: np.ndarray
    height: float
    radius: float

    @property
    def tip(self) -> np.ndarray:
        return self.base + np.array([0.0, 0.0, self.height])


@dataclass(frozen=True)
class ArmObservation:
    name: str
    pos: np.ndarray
    q: np.ndarray
    gripper: str


@dataclass(frozen=True)
class Observation:
    """Scene poses at one instant, from ground truth or synthetic vision."""

    time: float
    source: str  # "ground_truth" | "perception"
    ring_poses: dict      # color -> (pos, quat); absent colors are missing
    ring_points: dict     # color -> (n, 3) points on the ring
    pegs: tuple           # PegObservation, static after the first frame
    arms: dict            # name -> ArmObservation


@dataclass(frozen=True)
class TargetPose:
    position: np.ndarray
    orientation: np.ndarray  # unit quaternion
    kind: str  # grasp | peg_approach | transfer_give | transfer_take


@dataclass(frozen=True)
class FailureEvent:
    time: float
    action: str
    reason: str  # ring_not_retrieved | ring_fallen | peg_occupied |
                 # grasp_failed | transfer_failed | timeout
    explanation: str

    def to_dict(self) -> dict:
        return {"time": round(self.time, 9), "action": self.action,
                "reason": self.reason, "explanation": self.explanation}


def observe_scene(scene, n_ring_points: int = 36) -> Observation:
    """Ground-truth observation taken directly from the scene state."""
    ring_poses = {}
    ring_points = {}
    for color, ring in scene.rings.items():
        if not scene.ring_visible(ring):
            continue
        ring_poses[color] = (ring.pos.copy(), ring.q.copy())
        thetas = np.linspace(0.0, 2 * np.pi, n_ring_points, endpoint=False)
        local = np.stack([
            scene.geometry.ring_major_radius * np.cos(thetas),
            scene.geometry.ring_major_radius * np.sin(thetas),
            np.zeros_like(thetas),
        ], axis=1)
        rot = quat.to_matrix(ring.q)
        ring_points[color] = ring.pos[None, :] + local @ rot.T
    pegs = tuple(
        PegObservation(peg_id=p.peg_id, color=p.color, base=p.base_point,
                       height=p.height, radius=p.radius)
        for p in scene.geometry.pegs)
    arms = {
        name: ArmObservation(name=name, pos=a.pos.copy(), q=a.q.copy(),
                             gripper=a.gripper)
        for name, a in scene.arms.items()
    }
    return Observation(time=scene.time, source="ground_truth",
                       ring_poses=ring_poses, ring_points=ring_points,
                       pegs=pegs, arms=arms)


def _round_half_up_mm(meters: float) -> int:
    return int(np.floor(meters * 1000.0 + 0.5))


class SituationAwareness:
    """Grounds atoms and watches executing actions.

    Peg poses are frozen at the first observation; later frames are only
    checked for consistency (drift beyond 2 mm raises StalePegs).
    """

    PEG_DRIFT_TOL = 0.002

    def __init__(self, geometry: GeometryConfig):
        self.geometry = geometry
        self.frozen_pegs: tuple | None = None

    # -- atom grounding ------------------------------------------------------
    def _freeze_or_check_pegs(self, obs: Observation) -> tuple:
        if self.frozen_pegs is None:
            self.frozen_pegs = obs.pegs
            return obs.pegs
        by_id = {p.peg_id: p for p in obs.pegs}
        for frozen in self.frozen_pegs:
            seen = by_id.get(frozen.peg_id)
            if seen is None:
                continue
            if np.linalg.norm(seen.base - frozen.base) > self.PEG_DRIFT_TOL:
                raise StalePegs(
                    f"peg {frozen.peg_id} moved "
                    f"{np.linalg.norm(seen.base - frozen.base) * 1000:.2f} mm")
        return self.frozen_pegs

    def ring_on_peg(self, ring_pos, peg: PegObservation) -> bool:
        lateral = float(np.hypot(ring_pos[0] - peg.base[0],
                                 ring_pos[1] - peg.base[1]))
        return (lateral <= self.geometry.threading_tol
                and peg.base[2] - 1e-9 <= ring_pos[2] <= peg.base[2] + peg.height)

    def _ring_surface_distance(self, pos, q, point) -> float:
        g = self.geometry
        rel = np.asarray(point, dtype=float) - pos
        n = quat.rotate(q, np.array([0.0, 0.0, 1.0]))
        zeta = float(np.dot(rel, n))
        rho = float(np.linalg.norm(rel - zeta * n))
        return abs(float(np.hypot(rho - g.ring_major_radius, zeta))
                   - g.ring_minor_radius)

    def compute_externals(self, obs: Observation) -> set:
        """reachable / on / closed_gripper / in_hand / distance atoms."""
        pegs = self._freeze_or_check_pegs(obs)
        atoms: set = set()
        holders: dict[str, list] = {}
        for name, arm in sorted(obs.arms.items()):
            if arm.gripper == "closed":
                atoms.add(GroundAtom("closed_gripper", (name,)))
        for color, (pos, q) in sorted(obs.ring_poses.items()):
            if not self.geometry.in_workspace(pos):
                continue
            held_by = []
            for name, arm in sorted(obs.arms.items()):
                if arm.gripper == "closed" and \
                        self._ring_surface_distance(pos, q, arm.pos) \
                        <= self.geometry.capture_radius:
                    atoms.add(GroundAtom("in_hand", (name, "ring", color)))
                    held_by.append(name)
            holders[color] = held_by
            for peg in pegs:
                if self.ring_on_peg(pos, peg):
                    atoms.add(GroundAtom("on", ("ring", color, "peg", peg.color)))
                    break
            if held_by:
                for name in held_by:
                    atoms.add(GroundAtom("reachable", (name, "ring", color)))
            else:
                atoms.add(GroundAtom("reachable", (arm_side(pos), "ring", color)))
        occupied_grey = set()
        for color, (pos, _q) in obs.ring_poses.items():
            for peg in pegs:
                if peg.color == "grey" and self.ring_on_peg(pos, peg):
                    occupied_grey.add(peg.peg_id)
        for peg in pegs:
            if peg.color == "grey" and peg.peg_id in occupied_grey:
                continue
            atoms.add(GroundAtom("reachable", (arm_side(peg.base), "peg", peg.color)))
        # distances, in whole millimeters, for every reachable ring
        for a in sorted(list(atoms)):
            if a.predicate == "reachable" and a.args[1] == "ring":
                arm_name, _, color = a.args
                pos, _q = obs.ring_poses[color]
                d = float(np.linalg.norm(obs.arms[arm_name].pos - pos))
                atoms.add(GroundAtom("distance",
                                     (arm_name, "ring", color, _round_half_up_mm(d))))
        return atoms

    # -- live targets ----------------------------------------------------------
    def grasp_point(self, ring_points, peg_positions) -> TargetPose:
        """The ring point farthest from the pegs, approached plane-orthogonally.

        Maximizes sqrt(sum_p |r - p|^2); ties break on the smallest index.
        """
        pts = np.asarray(ring_points, dtype=float)
        if len(pts) < 8:
            raise ValueError("need at least 8 ring points")
        pegs = np.asarray(list(peg_positions), dtype=float)
        if len(pegs) == 0:
            raise ValueError("need at least one peg position")
        d2 = ((pts[:, None, :] - pegs[None, :, :]) ** 2).sum(axis=2).sum(axis=1)
        best = int(np.argmax(d2))  # argmax of the sqrt is the same point
        centered = pts - pts.mean(axis=0)
        _u, sv, vt = np.linalg.svd(centered, full_matrices=False)
        if sv[1] < 1e-9 * max(sv[0], 1e-12):
            raise DegenerateRing("ring points are collinear")
        normal = vt[2]
        if normal[2] < 0:
            normal = -normal
        return TargetPose(position=pts[best].copy(),
                          orientation=quat.pointing(-normal),
                          kind="grasp")

    def peg_target(self, peg: PegObservation, offset: float | None = None) -> TargetPose:
        off = self.geometry.peg_approach_offset if offset is None else offset
        return TargetPose(
            position=peg.tip + np.array([0.0, 0.0, off]),
            orientation=quat.pointing([0.0, 0.0, -1.0]),
            kind="peg_approach")

    def transfer_give_target(self) -> TargetPose:
        return TargetPose(
            position=np.array(self.geometry.transfer_point, dtype=float),
            orientation=quat.pointing([0.0, 0.0, -1.0]),
            kind="transfer_give")

    def transfer_target(self, holder_grasp_point, ring_pos, ring_q) -> TargetPose:
        """The centerline point diametrically opposite the holder's grasp."""
        c = np.asarray(ring_pos, dtype=float)
        n = quat.rotate(ring_q, np.array([0.0, 0.0, 1.0]))
        w = np.asarray(holder_grasp_point, dtype=float) - c
        w_in_plane = w - np.dot(w, n) * n
        nw = float(np.linalg.norm(w_in_plane))
        if nw < 1e-9:
            w_in_plane = np.array([1.0, 0.0, 0.0]) - n[0] * n
            nw = float(np.linalg.norm(w_in_plane))
        u = w_in_plane / nw
        proj = c + self.geometry.ring_major_radius * u
        take = 2.0 * c - proj
        if n[2] < 0:
            n = -n
        return TargetPose(position=take, orientation=quat.pointing(-n),
                          kind="transfer_take")

    # -- failure monitoring ------------------------------------------------------
    def _ring_held_by(self, obs: Observation, arm_name: str, color: str) -> bool:
        pose = obs.ring_poses.get(color)
        if pose is None:
            return False
        arm = obs.arms[arm_name]
        if arm.gripper != "closed":
            return False
        return (self._ring_surface_distance(pose[0], pose[1], arm.pos)
                <= self.geometry.capture_radius)

    def monitor(self, action, obs: Observation, context=None) -> FailureEvent | None:
        """Check the executing action's failure branch against an observation.

        `action` is the planner GroundAction; `context` may carry
        {"ring": color, "peg_id": id} for actions whose failure conditions
        concern a carried ring or a destination peg.
        """
        context = context or {}
        name = action.name
        arm = action.args[0]
        if name == "move" and action.args[1] == "ring":
            color = action.args[2]
            if color not in obs.ring_poses:
                return FailureEvent(
                    time=obs.time, action=str(action), reason="ring_not_retrieved",
                    explanation=(f"{action}: pose of ring {color} not retrieved "
                                 "while moving to it (move-to-ring check)"))
            return None
        if name == "move" and action.args[1] == "peg":
            color = context.get("ring")
            if color is not None and not self._ring_held_by(obs, arm, color):
                return FailureEvent(
                    time=obs.time, action=str(action), reason="ring_fallen",
                    explanation=(f"{action}: ring {color} fell from {arm} "
                                 "while moving to the peg (move-to-peg check)"))
            peg_id = context.get("peg_id")
            if peg_id is not None:
                peg = next((p for p in (self.frozen_pegs or obs.pegs)
                            if p.peg_id == peg_id), None)
                if peg is not None:
                    for other, (pos, _q) in obs.ring_poses.items():
                        if other == color:
                            continue
                        if self.ring_on_peg(pos, peg):
                            return FailureEvent(
                                time=obs.time, action=str(action),
                                reason="peg_occupied",
                                explanation=(f"{action}: destination peg "
                                             f"{peg.color} became occupied by ring "
                                             f"{other} (move-to-peg check)"))
            return None
        if name == "move" and action.args[1] == "center":
            color = context.get("ring")
            holder = context.get("holder", arm)
            if color is not None and not self._ring_held_by(obs, holder, color):
                return FailureEvent(
                    time=obs.time, action=str(action), reason="ring_fallen",
                    explanation=(f"{action}: ring {color} fell during the "
                                 "hand-off approach (move-to-center check)"))
            return None
        return None
