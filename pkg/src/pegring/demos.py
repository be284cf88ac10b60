"""Synthetic gesture demonstrations for the three move classes.

Stand-ins for tele-operated recordings: minimum-jerk timing along the
start-goal chord with a sinusoidal lift, so approach and retreat stay clear
of pegs, plus a slerp orientation ramp.  Deterministic per seed.
"""

from __future__ import annotations

import numpy as np

from . import quat
from .dmp import TrajectorySample

GESTURE_CLASSES = ("move_ring", "move_peg", "move_center")

_LIFT = {"move_ring": 0.030, "move_peg": 0.040, "move_center": 0.025}


def _min_jerk(u: np.ndarray) -> np.ndarray:
    return 10 * u ** 3 - 15 * u ** 4 + 6 * u ** 5


def synth_demo(gesture: str, x0, g, q0=None, g_q=None, duration: float = 2.0,
               hz: float = 100.0, noise: float = 0.0, seed: int = 0):
    """One synthetic demo of a gesture class, optionally jittered."""
    if gesture not in GESTURE_CLASSES:
        raise ValueError(f"unknown gesture {gesture!r}")
    x0 = np.asarray(x0, dtype=float)
    g = np.asarray(g, dtype=float)
    q0 = quat.IDENTITY if q0 is None else np.asarray(q0, dtype=float)
    g_q = quat.pointing([0.0, 0.0, -1.0]) if g_q is None else np.asarray(g_q, dtype=float)
    lift = _LIFT[gesture]
    n = int(round(duration * hz)) + 1
    ts = np.linspace(0.0, duration, n)
    rng = np.random.default_rng(seed)
    # smooth random waviness so multiple "users" differ
    amp = rng.normal(0.0, noise, 3) if noise > 0 else np.zeros(3)
    phase = rng.uniform(0, 2 * np.pi, 3)
    demo = []
    for t in ts:
        u = float(_min_jerk(np.array(t / duration)))
        x = x0 + u * (g - x0)
        x = x + np.array([0.0, 0.0, lift * np.sin(np.pi * u)])
        x = x + amp * np.sin(2 * np.pi * (t / duration) + phase) * np.sin(np.pi * u)
        q = quat.slerp(q0, g_q, u)
        demo.append(TrajectorySample(t=float(t), x=x, q=q))
    return demo


def gesture_demo_set(gesture: str, n_demos: int = 3, seed: int = 0,
                     duration: float = 2.0, noise: float = 0.002):
    """A batch of demos of one gesture class with varied endpoints."""
    rng = np.random.default_rng(seed)
    demos = []
    for i in range(n_demos):
        x0 = np.array([-0.045, -0.035, 0.02]) + rng.normal(0, 0.004, 3)
        g = np.array([0.035, 0.03, 0.004]) + rng.normal(0, 0.004, 3)
        demos.append(synth_demo(
            gesture, x0, g, duration=duration, hz=100.0,
            noise=noise, seed=seed * 101 + i))
    return demos


def default_models(seed: int = 0):
    """Learned models for the three gesture classes (deterministic)."""
    from .dmp import learn

    models = {}
    for i, gesture in enumerate(GESTURE_CLASSES):
        demos = gesture_demo_set(gesture, n_demos=3, seed=seed + 17 * i)
        models[gesture] = learn(demos, gesture=gesture)
    return models
