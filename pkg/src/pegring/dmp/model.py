"""Learned DMP parameters, serialization, and start/goal generalization."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import quat
from .basis import MollifierBasis

ONES_DIAGONAL = np.ones(3)


class DegenerateGoal(Exception):
    """Start and goal are too close for the roto-dilatation to exist."""


@dataclass(frozen=True)
class RotoDilatation:
    """Rotation plus uniform scaling between two displacement vectors."""

    rotation: np.ndarray  # unit quaternion
    scale: float

    def apply(self, v: np.ndarray) -> np.ndarray:
        return self.scale * quat.rotate(self.rotation, np.asarray(v, dtype=float))

    def matrix(self) -> np.ndarray:
        return self.scale * quat.to_matrix(self.rotation)

    @property
    def is_identity(self) -> bool:
        return abs(self.scale - 1.0) < 1e-12 and abs(float(self.rotation[0])) > 1.0 - 1e-12


def rotoscale(a: np.ndarray, b: np.ndarray) -> RotoDilatation:
    """The minimal rotation plus scaling taking displacement a onto b."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na < 1e-9 or nb < 1e-9:
        raise DegenerateGoal("displacement too small for roto-dilatation")
    return RotoDilatation(rotation=quat.rotation_between(a, b), scale=nb / na)


@dataclass
class DmpModel:
    """Weights, gains and basis for one gesture class.

    Cartesian and orientation parts share one canonical system (same alpha).
    The critical damping condition d = 2*sqrt(k) is enforced throughout.
    Weights live in the normalized frame where every demo starts at the
    origin and ends at the all-ones vector.
    """

    gesture: str = "gesture"
    k_gain: float = 150.0
    kq_gain: float = 150.0
    alpha: float = 4.0
    basis: MollifierBasis = field(default_factory=MollifierBasis)
    weights: np.ndarray = field(default_factory=lambda: np.zeros((3, 15)))
    quat_weights: np.ndarray = field(default_factory=lambda: np.zeros((3, 15)))
    x0_learn: np.ndarray = field(default_factory=lambda: np.zeros(3))
    g_learn: np.ndarray = field(default_factory=lambda: np.ones(3))
    q0_learn: np.ndarray = field(default_factory=lambda: quat.IDENTITY.copy())
    gq_learn: np.ndarray = field(default_factory=lambda: quat.IDENTITY.copy())
    duration_learn: float = 1.0

    @property
    def d_gain(self) -> float:
        return 2.0 * float(np.sqrt(self.k_gain))

    @property
    def dq_gain(self) -> float:
        return 2.0 * float(np.sqrt(self.kq_gain))

    def base_transform(self) -> RotoDilatation:
        """Normalized frame (0 -> ones) onto the learned displacement."""
        return rotoscale(ONES_DIAGONAL, self.g_learn - self.x0_learn)

    def forcing_world(self, s: float, x0: np.ndarray, g: np.ndarray) -> np.ndarray:
        """Forcing mapped onto the current start/goal displacement."""
        disp = np.asarray(g, dtype=float) - np.asarray(x0, dtype=float)
        if np.linalg.norm(disp) < 1e-9:
            return np.zeros(3)
        f_norm = self.basis.forcing(s, self.weights)
        m = generalize(self, x0, g)
        return m.apply(self.base_transform().apply(f_norm))

    def forcing_quat(self, s: float) -> np.ndarray:
        return self.basis.forcing(s, self.quat_weights)

    # -- serialization ------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "format": "pegring-dmp-v1",
            "gesture": self.gesture,
            "k_gain": self.k_gain,
            "kq_gain": self.kq_gain,
            "alpha": self.alpha,
            "basis": self.basis.to_dict(),
            "weights": [[float(w) for w in row] for row in self.weights],
            "quat_weights": [[float(w) for w in row] for row in self.quat_weights],
            "x0_learn": [float(v) for v in self.x0_learn],
            "g_learn": [float(v) for v in self.g_learn],
            "q0_learn": [float(v) for v in self.q0_learn],
            "gq_learn": [float(v) for v in self.gq_learn],
            "duration_learn": self.duration_learn,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DmpModel":
        if d.get("format") != "pegring-dmp-v1":
            raise ValueError(f"unknown model format {d.get('format')!r}")
        return cls(
            gesture=d["gesture"],
            k_gain=d["k_gain"],
            kq_gain=d["kq_gain"],
            alpha=d["alpha"],
            basis=MollifierBasis.from_dict(d["basis"]),
            weights=np.array(d["weights"], dtype=float),
            quat_weights=np.array(d["quat_weights"], dtype=float),
            x0_learn=np.array(d["x0_learn"], dtype=float),
            g_learn=np.array(d["g_learn"], dtype=float),
            q0_learn=np.array(d["q0_learn"], dtype=float),
            gq_learn=np.array(d["gq_learn"], dtype=float),
            duration_learn=d["duration_learn"],
        )


def save_model(model: DmpModel, path) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), indent=1), encoding="utf-8")


def load_model(path) -> DmpModel:
    return DmpModel.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def generalize(model: DmpModel, x0_new, g_new) -> RotoDilatation:
    """Transform mapping the learned displacement onto (g_new - x0_new).

    Applied to the forcing output it re-aims the learned shape; it is the
    identity when the new displacement equals the learned one.
    """
    x0_new = np.asarray(x0_new, dtype=float)
    g_new = np.asarray(g_new, dtype=float)
    if np.linalg.norm(g_new - x0_new) < 1e-6:
        raise DegenerateGoal("new displacement is near zero")
    return rotoscale(model.g_learn - model.x0_learn, g_new - x0_new)
