"""Shared phase dynamics tau * s_dot = -alpha * s, s(0) = 1."""

from __future__ import annotations

import numpy as np


class CanonicalSystem:
    """Exponentially decaying phase shared by position and orientation parts.

    The discrete update uses the exact closed form, so the phase matches
    exp(-alpha * t / tau) to machine precision at any step size.
    """

    def __init__(self, alpha: float = 4.0, tau: float = 1.0):
        if alpha <= 0 or tau <= 0:
            raise ValueError("alpha and tau must be positive")
        self.alpha = float(alpha)
        self.tau = float(tau)
        self.s = 1.0

    def reset(self) -> None:
        self.s = 1.0

    def step(self, dt: float) -> float:
        self.s *= float(np.exp(-self.alpha * dt / self.tau))
        return self.s

    def value(self, t: float) -> float:
        return float(np.exp(-self.alpha * t / self.tau))
