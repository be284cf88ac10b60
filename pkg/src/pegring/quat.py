"""Unit quaternion helpers, scalar-first convention (w, x, y, z)."""

from __future__ import annotations

import numpy as np

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


def normalize(q: np.ndarray) -> np.ndarray:
    n = float(np.linalg.norm(q))
    if n < 1e-12 or not np.isfinite(n):
        return IDENTITY.copy()
    return q / n


def multiply(q1: np.ndarray, q2: np.ndarray) -> np.ndarray:
    """Hamilton product q1 * q2."""
    w1, x1, y1, z1 = q1
    w2, x2, y2, z2 = q2
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


def conjugate(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def log(q: np.ndarray) -> np.ndarray:
    """Logarithmic map of a unit quaternion, returned as a 3-vector.

    exp(log(q)) == q up to sign; log(identity) == 0.
    """
    w = float(np.clip(q[0], -1.0, 1.0))
    v = q[1:4]
    nv = float(np.linalg.norm(v))
    if nv < 1e-14:
        return np.zeros(3)
    angle = np.arctan2(nv, w)
    return (v / nv) * angle


def exp(v: np.ndarray) -> np.ndarray:
    """Exponential map from a 3-vector to a unit quaternion."""
    angle = float(np.linalg.norm(v))
    if angle < 1e-14:
        return IDENTITY.copy()
    axis = v / angle
    return np.concatenate(([np.cos(angle)], axis * np.sin(angle)))


def rotate(q: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Rotate 3-vector p by unit quaternion q."""
    w, x, y, z = q
    # q * (0, p) * q_conj expanded
    t = 2.0 * np.cross(q[1:4], p)
    return p + w * t + np.cross(q[1:4], t)


def to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def from_axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    half = 0.5 * angle
    return np.concatenate(([np.cos(half)], axis * np.sin(half)))


def rotation_between(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Minimal rotation taking direction a onto direction b.

    Deterministic for the antiparallel case: the flip axis is picked as the
    coordinate axis most orthogonal to a.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    d = float(np.dot(a, b))
    if d > 1.0 - 1e-12:
        return IDENTITY.copy()
    if d < -1.0 + 1e-12:
        # 180 degrees: any axis orthogonal to a works; pick deterministically
        k = int(np.argmin(np.abs(a)))
        e = np.zeros(3)
        e[k] = 1.0
        axis = np.cross(a, e)
        axis /= np.linalg.norm(axis)
        return from_axis_angle(axis, np.pi)
    axis = np.cross(a, b)
    axis /= np.linalg.norm(axis)
    return from_axis_angle(axis, float(np.arccos(np.clip(d, -1.0, 1.0))))


def slerp(q0: np.ndarray, q1: np.ndarray, u: float) -> np.ndarray:
    """Spherical interpolation along the shorter arc, u in [0, 1]."""
    q0 = normalize(np.asarray(q0, dtype=float))
    q1 = normalize(np.asarray(q1, dtype=float))
    d = float(np.dot(q0, q1))
    if d < 0.0:
        q1 = -q1
        d = -d
    if d > 1.0 - 1e-10:
        return normalize(q0 + u * (q1 - q0))
    theta = np.arccos(np.clip(d, -1.0, 1.0))
    s = np.sin(theta)
    return (np.sin((1.0 - u) * theta) / s) * q0 + (np.sin(u * theta) / s) * q1


def geodesic_angle(q0: np.ndarray, q1: np.ndarray) -> float:
    """Rotation angle (rad) between two unit quaternions, sign-invariant."""
    d = abs(float(np.dot(q0, q1)))
    return 2.0 * float(np.arccos(np.clip(d, -1.0, 1.0)))


def pointing(approach: np.ndarray) -> np.ndarray:
    """Canonical orientation whose body +z axis points along `approach`.

    Built as the minimal rotation taking world +z onto the approach
    direction; the straight-down case resolves to a 180 degree flip about x.
    """
    approach = np.asarray(approach, dtype=float)
    return rotation_between(np.array([0.0, 0.0, 1.0]), approach)
