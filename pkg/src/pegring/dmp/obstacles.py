"""Repulsive potential fields around pegs (modeled as vertical segments)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

GRADIENT_CAP = 10.0  # m/s^2


@dataclass(frozen=True)
class Obstacle:
    """Repulsive field source: a segment (pegs) or a point (p0 == p1).

    U(d) = strength * exp(-decay * d) * w(d / influence_radius) inside the
    influence radius and exactly zero outside; w is a cubic window that is 1
    at the source and fades smoothly to 0 at the boundary.
    """

    p0: np.ndarray
    p1: np.ndarray
    influence_radius: float = 0.03
    strength: float = 0.05
    decay: float = 150.0

    def __post_init__(self):
        if self.influence_radius <= 0:
            raise ValueError("influence radius must be positive")
        if self.strength < 0:
            raise ValueError("strength must be nonnegative")
        if self.decay <= 0:
            raise ValueError("decay must be positive")

    @classmethod
    def point(cls, o, **kw) -> "Obstacle":
        o = np.asarray(o, dtype=float)
        return cls(p0=o, p1=o.copy(), **kw)

    @classmethod
    def segment(cls, a, b, **kw) -> "Obstacle":
        return cls(p0=np.asarray(a, dtype=float), p1=np.asarray(b, dtype=float), **kw)

    def closest_point(self, x: np.ndarray) -> np.ndarray:
        d = self.p1 - self.p0
        denom = float(np.dot(d, d))
        if denom < 1e-18:
            return self.p0
        u = float(np.dot(x - self.p0, d)) / denom
        return self.p0 + np.clip(u, 0.0, 1.0) * d

    def distance(self, x: np.ndarray) -> float:
        return float(np.linalg.norm(x - self.closest_point(x)))


def _window(u: float) -> float:
    return 1.0 - 3.0 * u * u + 2.0 * u ** 3


def _window_deriv(u: float) -> float:
    return -6.0 * u + 6.0 * u * u


def potential(x, obstacles) -> float:
    """Total repulsive potential U(x)."""
    x = np.asarray(x, dtype=float)
    total = 0.0
    for ob in obstacles:
        d = ob.distance(x)
        if d >= ob.influence_radius:
            continue
        total += ob.strength * np.exp(-ob.decay * d) * _window(d / ob.influence_radius)
    return float(total)


def obstacle_gradient(x, obstacles, cap: float = GRADIENT_CAP) -> np.ndarray:
    """Repulsive acceleration -grad U(x), magnitude capped.

    Exactly on a source the direction is undefined and that obstacle
    contributes nothing (the cap keeps nearby values bounded anyway).
    """
    x = np.asarray(x, dtype=float)
    acc = np.zeros(3)
    for ob in obstacles:
        cp = ob.closest_point(x)
        delta = x - cp
        d = float(np.linalg.norm(delta))
        if d >= ob.influence_radius or d < 1e-12:
            continue
        u = d / ob.influence_radius
        du_dd = ob.strength * np.exp(-ob.decay * d) * (
            -ob.decay * _window(u) + _window_deriv(u) / ob.influence_radius)
        acc += (-du_dd) * (delta / d)
    norm = float(np.linalg.norm(acc))
    if norm > cap:
        acc *= cap / norm
    return acc
