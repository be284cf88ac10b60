"""Semi-implicit Euler integration of the transformation systems.

Position (per dimension, critical damping d = 2*sqrt(k)):

    tau * v_dot = k (g - x) - d v - k (g - x0) s + k f(s) + tau^2 * a_obs
    tau * x_dot = v

Orientation mirrors the same dynamics in quaternion log space.  Both parts
read the single shared phase, which is advanced with its exact closed form;
the (g - x0) s term always uses the rollout's original start with the
current (possibly moving) goal.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .. import quat
from .model import DmpModel
from .obstacles import obstacle_gradient


class NonFiniteState(Exception):
    """Integration produced NaN or infinity."""


@dataclass(frozen=True)
class DmpState:
    """Instantaneous rollout state; x0/q0 anchor the start-dependent terms."""

    x: np.ndarray
    v: np.ndarray
    q: np.ndarray
    omega: np.ndarray
    s: float
    x0: np.ndarray
    q0: np.ndarray

    @classmethod
    def at_rest(cls, x0, q0) -> "DmpState":
        x0 = np.asarray(x0, dtype=float)
        q0 = quat.normalize(np.asarray(q0, dtype=float))
        return cls(x=x0.copy(), v=np.zeros(3), q=q0.copy(),
                   omega=np.zeros(3), s=1.0, x0=x0.copy(), q0=q0.copy())


def quaternion_step(q, omega, g_q, s, k_gain, dt, tau,
                    forcing=None, q0=None) -> tuple:
    """One orientation step; returns (q', omega').

    The error is 2*log(g_q * conj(q)); g_q is sign-flipped onto the
    hemisphere of q first so the geodesic is the shorter one.  q' is
    renormalized every step.
    """
    q = np.asarray(q, dtype=float)
    g_q = np.asarray(g_q, dtype=float)
    if np.dot(q, g_q) < 0:
        g_q = -g_q
    d_gain = 2.0 * np.sqrt(k_gain)
    eq = 2.0 * quat.log(quat.multiply(g_q, quat.conjugate(q)))
    if q0 is not None:
        q0 = np.asarray(q0, dtype=float)
        if np.dot(q0, g_q) < 0:
            q0 = -q0
        eq0 = 2.0 * quat.log(quat.multiply(g_q, quat.conjugate(q0)))
    else:
        eq0 = np.zeros(3)
    f = np.zeros(3) if forcing is None else np.asarray(forcing, dtype=float)
    omega2 = omega + (dt / tau) * (
        k_gain * eq - d_gain * omega - k_gain * eq0 * s + k_gain * f)
    q2 = quat.normalize(quat.multiply(quat.exp(0.5 * (dt / tau) * omega2), q))
    return q2, omega2


def integrate_step(model: DmpModel, state: DmpState, g, g_q,
                   obstacles=(), dt: float = 0.01, tau: float = 1.0) -> DmpState:
    """Advance position, orientation and the shared phase by one tick."""
    if dt <= 0 or tau <= 0:
        raise ValueError("dt and tau must be positive")
    g = np.asarray(g, dtype=float)
    k = model.k_gain
    d = model.d_gain
    f = model.forcing_world(state.s, state.x0, g)
    a_obs = obstacle_gradient(state.x, obstacles) if obstacles else np.zeros(3)
    v2 = state.v + (dt / tau) * (
        k * (g - state.x) - d * state.v - k * (g - state.x0) * state.s
        + k * f + tau * tau * a_obs)
    x2 = state.x + (dt / tau) * v2
    q2, omega2 = quaternion_step(
        state.q, state.omega, g_q, state.s, model.kq_gain, dt, tau,
        forcing=model.forcing_quat(state.s), q0=state.q0)
    s2 = state.s * float(np.exp(-model.alpha * dt / tau))
    if not (np.all(np.isfinite(x2)) and np.all(np.isfinite(v2))
            and np.all(np.isfinite(q2)) and np.all(np.isfinite(omega2))):
        raise NonFiniteState("integration diverged")
    return replace(state, x=x2, v=v2, q=q2, omega=omega2, s=s2)


def rollout(model: DmpModel, x0, g, q0=None, g_q=None, tau: float = 1.0,
            dt: float = 0.01, obstacles=(), duration: float | None = None,
            goal_fn=None):
    """Full integration from rest; returns dict of stacked arrays.

    `goal_fn(t) -> (g, g_q)` overrides the static goal to exercise moving
    targets.  Default duration is 1.5x the learned duration scaled by tau.
    """
    q0 = quat.IDENTITY if q0 is None else q0
    g_q = quat.IDENTITY if g_q is None else g_q
    state = DmpState.at_rest(x0, q0)
    if duration is None:
        duration = 1.5 * model.duration_learn * tau
    n = int(round(duration / dt))
    ts = np.zeros(n + 1)
    xs = np.zeros((n + 1, 3))
    vs = np.zeros((n + 1, 3))
    qs = np.zeros((n + 1, 4))
    ss = np.zeros(n + 1)
    xs[0], vs[0], qs[0], ss[0] = state.x, state.v, state.q, state.s
    g_cur, gq_cur = np.asarray(g, dtype=float), np.asarray(g_q, dtype=float)
    for i in range(1, n + 1):
        t = i * dt
        if goal_fn is not None:
            g_cur, gq_cur = goal_fn(t)
        state = integrate_step(model, state, g_cur, gq_cur,
                               obstacles=obstacles, dt=dt, tau=tau)
        ts[i] = t
        xs[i], vs[i], qs[i], ss[i] = state.x, state.v, state.q, state.s
    return {"t": ts, "x": xs, "v": vs, "q": qs, "s": ss}
