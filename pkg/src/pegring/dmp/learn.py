"""Batch learning of DMP weights from demonstrated trajectories.

Every demo is resampled to a uniform grid, normalized by roto-dilatation to
start at the origin and end at the all-ones vector, and differentiated to
recover the forcing that the transformation system would have needed:

    f(s) = (x_dd + d_gain * x_d) / k_gain - (g - x) + (g - x0) * s

with tau = 1 over the demo duration.  Weights minimize the L2 error of the
normalized basis expansion over the union of all demo samples; orientation
weights are fitted the same way in the quaternion log space.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import quat
from .basis import MollifierBasis
from .model import ONES_DIAGONAL, DmpModel, rotoscale


class DegenerateDemo(Exception):
    """A demo's start and goal coincide; roto-dilatation is undefined."""


class RankDeficient(Exception):
    """The regression system is singular (too few distinct phase samples)."""


# Forcing samples are fitted only while the phase is numerically alive: the
# expansion is f = (...) * s, so rows with s ~ 0 constrain nothing and only
# inject differentiation noise amplified by 1/s.
S_FLOOR = 1e-4


@dataclass(frozen=True)
class TrajectorySample:
    """One timestamped pose sample of a demonstration."""

    t: float
    x: np.ndarray
    q: np.ndarray
    v: np.ndarray | None = None


def _as_arrays(demo):
    t = np.array([s.t for s in demo], dtype=float)
    x = np.array([s.x for s in demo], dtype=float)
    q = np.array([s.q for s in demo], dtype=float)
    if len(t) < 2 or np.any(np.diff(t) <= 0):
        raise ValueError("demo times must be strictly increasing")
    norms = np.linalg.norm(q, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-6):
        raise ValueError("demo quaternions must be unit norm")
    q = q / norms[:, None]
    return t, x, q


def resample_demo(demo, hz: float = 100.0):
    """Uniform-rate copy of a demo: linear positions, slerp orientations."""
    t, x, q = _as_arrays(demo)
    duration = t[-1] - t[0]
    n = max(int(round(duration * hz)), 2) + 1
    tt = np.linspace(t[0], t[-1], n)
    xx = np.stack([np.interp(tt, t, x[:, k]) for k in range(x.shape[1])], axis=1)
    # keep hemispheres consistent before interpolating
    qs = q.copy()
    for i in range(1, len(qs)):
        if np.dot(qs[i - 1], qs[i]) < 0:
            qs[i] = -qs[i]
    qq = np.zeros((n, 4))
    idx = np.searchsorted(t, tt, side="right") - 1
    idx = np.clip(idx, 0, len(t) - 2)
    for j, (ti, i) in enumerate(zip(tt, idx)):
        span = t[i + 1] - t[i]
        u = 0.0 if span <= 0 else (ti - t[i]) / span
        qq[j] = quat.slerp(qs[i], qs[i + 1], float(u))
    return [TrajectorySample(t=float(ti - tt[0]), x=xi, q=qi)
            for ti, xi, qi in zip(tt, xx, qq)]


def _derivative(y: np.ndarray, dt: float) -> np.ndarray:
    """Time derivative along axis 0: fourth-order central in the interior.

    Edge samples fall back to np.gradient's one-sided stencils; callers trim
    them before regression anyway.
    """
    if len(y) < 7:
        return np.gradient(y, dt, axis=0)
    out = np.gradient(y, dt, axis=0)
    out[2:-2] = (-y[4:] + 8.0 * y[3:-1] - 8.0 * y[1:-3] + y[:-4]) / (12.0 * dt)
    return out


def _quat_log_error(gq: np.ndarray, q: np.ndarray) -> np.ndarray:
    """2 * log(gq * conj(q)), with the shorter-arc sign convention."""
    if np.dot(gq, q) < 0:
        gq = -gq
    return 2.0 * quat.log(quat.multiply(gq, quat.conjugate(q)))


def _angular_velocity(q: np.ndarray, dt: float) -> np.ndarray:
    """World-frame angular velocities by quaternion differencing."""
    n = len(q)
    w = np.zeros((n, 3))
    for i in range(n - 1):
        dq = quat.multiply(q[i + 1], quat.conjugate(q[i]))
        if dq[0] < 0:
            dq = -dq
        w[i] = 2.0 * quat.log(dq) / dt
    w[-1] = w[-2]
    return w


def learn(demos, gesture: str = "gesture", k_gain: float = 150.0,
          kq_gain: float = 150.0, alpha: float = 4.0,
          basis: MollifierBasis | None = None, hz: float = 100.0) -> DmpModel:
    """Fit one DmpModel from one or more demos of the same gesture class."""
    if not demos:
        raise ValueError("need at least one demo")
    if k_gain <= 0 or kq_gain <= 0:
        raise ValueError("gains must be positive")
    d_gain = 2.0 * np.sqrt(k_gain)
    dq_gain = 2.0 * np.sqrt(kq_gain)

    resampled = []
    for demo in demos:
        if len(demo) < 10:
            raise ValueError("each demo needs at least 10 samples")
        resampled.append(resample_demo(demo, hz=hz))
    durations = [samples[-1].t for samples in resampled]
    if basis is None:
        # bumps equispaced over the mean gesture duration
        basis = MollifierBasis(phase_span=alpha * float(np.mean(durations)))

    rows = []
    targets = []
    q_rows = []
    q_targets = []
    endpoints = None

    for samples in resampled:
        t = np.array([s.t for s in samples])
        x = np.array([s.x for s in samples])
        q = np.array([s.q for s in samples])
        dt = t[1] - t[0]
        x0, g = x[0], x[-1]
        if np.linalg.norm(g - x0) < 1e-6:
            raise DegenerateDemo("demo displacement below 1e-6 m")
        if endpoints is None:
            endpoints = (x0.copy(), g.copy(), q[0].copy(), q[-1].copy())
        # normalize: start at origin, end at the all-ones vector
        m = rotoscale(g - x0, ONES_DIAGONAL)
        y = (x - x0) @ m.matrix().T
        yd = _derivative(y, dt)
        ydd = _derivative(yd, dt)
        s = np.exp(-alpha * t)  # tau = 1
        # keep rows where the phase is alive and differencing is central
        alive = s >= S_FLOOR
        alive[:4] = False
        alive[-4:] = False
        f = (ydd + d_gain * yd) / k_gain - (ONES_DIAGONAL - y) + np.outer(s, ONES_DIAGONAL)
        rows.append(basis.design(s)[alive])
        targets.append(f[alive])
        # orientation part, in log space of the demo's own endpoints
        gq = q[-1]
        eq = np.array([_quat_log_error(gq, qi) for qi in q])
        eq0 = _quat_log_error(gq, q[0])
        w = _angular_velocity(q, dt)
        wd = _derivative(w, dt)
        fq = (wd + dq_gain * w) / kq_gain - eq + np.outer(s, eq0)
        q_rows.append(basis.design(s)[alive])
        q_targets.append(fq[alive])

    phi = np.vstack(rows)
    f_all = np.vstack(targets)
    if phi.shape[0] < basis.n:
        raise RankDeficient(
            f"{phi.shape[0]} samples cannot determine {basis.n} weights")
    # least squares; directions the data never activates get zero weight
    weights, *_ = np.linalg.lstsq(phi, f_all, rcond=None)
    qphi = np.vstack(q_rows)
    q_weights, *_ = np.linalg.lstsq(qphi, np.vstack(q_targets), rcond=None)

    x0, g, q0, gq = endpoints
    return DmpModel(
        gesture=gesture,
        k_gain=float(k_gain),
        kq_gain=float(kq_gain),
        alpha=float(alpha),
        basis=basis,
        weights=weights.T.copy(),
        quat_weights=q_weights.T.copy(),
        x0_learn=x0,
        g_learn=g,
        q0_learn=q0,
        gq_learn=gq,
        duration_learn=float(np.mean(durations)),
    )


# -- demo CSV files (t,x,y,z,qw,qx,qy,qz; SI units; one demo per file) -------

CSV_HEADER = ["t", "x", "y", "z", "qw", "qx", "qy", "qz"]


def save_demo_csv(demo, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for s in demo:
            w.writerow([repr(float(s.t))] + [repr(float(v)) for v in s.x]
                       + [repr(float(v)) for v in s.q])


def load_demo_csv(path):
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != CSV_HEADER:
            raise ValueError(f"{path}: expected header {','.join(CSV_HEADER)}")
        demo = []
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 8:
                raise ValueError(f"{path}:{line}: expected 8 columns")
            vals = [float(v) for v in row]
            demo.append(TrajectorySample(
                t=vals[0], x=np.array(vals[1:4]), q=np.array(vals[4:8])))
    if not demo:
        raise ValueError(f"{path}: no samples")
    return demo
