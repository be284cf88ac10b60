"""Geometric model fitting: RANSAC plane, Euclidean clustering, RANSAC torus."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares


class PlaneNotFound(Exception):
    """Plane RANSAC failed to reach the required inlier fraction."""


class NoModel(Exception):
    """Torus RANSAC found no model above the inlier threshold."""


@dataclass(frozen=True)
class Plane:
    normal: np.ndarray  # unit
    offset: float       # plane: normal . x = offset

    def signed_distance(self, pts: np.ndarray) -> np.ndarray:
        return pts @ self.normal - self.offset


@dataclass(frozen=True)
class TorusFit:
    center: np.ndarray
    axis: np.ndarray        # unit
    major_radius: float
    minor_radius: float
    inliers: int
    inlier_fraction: float

    def __post_init__(self):
        if self.major_radius <= 0 or self.minor_radius <= 0:
            raise ValueError("radii must be positive")
        if not (0.0 <= self.inlier_fraction <= 1.0):
            raise ValueError("inlier fraction out of range")


def _plane_from_svd(pts: np.ndarray):
    centroid = pts.mean(axis=0)
    _u, sv, vt = np.linalg.svd(pts - centroid, full_matrices=False)
    normal = vt[2]
    return centroid, normal, sv


def fit_plane_ransac(pts: np.ndarray, tol: float = 0.001,
                     iterations: int = 100, min_inlier_fraction: float = 0.5,
                     seed: int = 0) -> Plane:
    """Robust plane fit; refined by SVD over the inlier set."""
    pts = np.asarray(pts, dtype=float)
    if len(pts) < 3:
        raise PlaneNotFound(f"only {len(pts)} candidate points")
    rng = np.random.default_rng(seed)
    best_count = -1
    best_inliers = None
    for _ in range(iterations):
        idx = rng.choice(len(pts), 3, replace=False)
        a, b, c = pts[idx]
        n = np.cross(b - a, c - a)
        nn = np.linalg.norm(n)
        if nn < 1e-12:
            continue
        n = n / nn
        d = np.abs((pts - a) @ n)
        inliers = d < tol
        count = int(inliers.sum())
        if count > best_count:
            best_count = count
            best_inliers = inliers
    if best_inliers is None or best_count / len(pts) < min_inlier_fraction:
        raise PlaneNotFound(
            f"best inlier fraction {max(best_count, 0) / len(pts):.2f} < "
            f"{min_inlier_fraction}")
    centroid, normal, _sv = _plane_from_svd(pts[best_inliers])
    if normal[2] < 0:
        normal = -normal
    return Plane(normal=normal, offset=float(centroid @ normal))


def euclidean_clusters(pts: np.ndarray, threshold: float,
                       min_size: int = 1) -> list:
    """Connected components under a pairwise distance threshold.

    Grid-hashed neighbor lookup; returns index arrays, largest first, with
    deterministic ordering.
    """
    pts = np.asarray(pts, dtype=float)
    n = len(pts)
    if n == 0:
        return []
    cell = np.floor(pts / threshold).astype(np.int64)
    grid: dict = {}
    for i in range(n):
        grid.setdefault(tuple(cell[i]), []).append(i)
    seen = np.zeros(n, dtype=bool)
    thr2 = threshold * threshold
    clusters = []
    for start in range(n):
        if seen[start]:
            continue
        stack = [start]
        seen[start] = True
        members = []
        while stack:
            i = stack.pop()
            members.append(i)
            ci = cell[i]
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    for dz in (-1, 0, 1):
                        for j in grid.get((ci[0] + dx, ci[1] + dy, ci[2] + dz), ()):
                            if not seen[j] and \
                                    np.dot(pts[i] - pts[j], pts[i] - pts[j]) <= thr2:
                                seen[j] = True
                                stack.append(j)
        if len(members) >= min_size:
            clusters.append(np.array(sorted(members), dtype=int))
    clusters.sort(key=lambda m: (-len(m), int(m[0])))
    return clusters


def torus_residuals(params: np.ndarray, pts: np.ndarray) -> np.ndarray:
    cx, cy, cz, nx, ny, nz, major, minor = params
    n = np.array([nx, ny, nz])
    n = n / max(np.linalg.norm(n), 1e-12)
    rel = pts - np.array([cx, cy, cz])
    zeta = rel @ n
    radial = rel - np.outer(zeta, n)
    rho = np.linalg.norm(radial, axis=1)
    return np.hypot(rho - major, zeta) - minor


def _torus_hypothesis(sample: np.ndarray):
    """Minimal 4-point torus guess: plane, projected circle, tube radius."""
    centroid, normal, sv = _plane_from_svd(sample)
    if sv[1] < 1e-9:
        return None  # collinear
    rel = sample - centroid
    zeta = rel @ normal
    in_plane = rel - np.outer(zeta, normal)
    # Kasa circle fit in the plane's 2-D coordinates
    e1 = in_plane[0] / max(np.linalg.norm(in_plane[0]), 1e-12)
    e2 = np.cross(normal, e1)
    xy = np.stack([in_plane @ e1, in_plane @ e2], axis=1)
    a_mat = np.column_stack([2 * xy, np.ones(len(xy))])
    b_vec = (xy ** 2).sum(axis=1)
    try:
        sol, *_ = np.linalg.lstsq(a_mat, b_vec, rcond=None)
    except np.linalg.LinAlgError:
        return None
    cx2, cy2, c0 = sol
    major2 = c0 + cx2 * cx2 + cy2 * cy2
    if major2 <= 1e-12:
        return None
    major = float(np.sqrt(major2))
    center = centroid + cx2 * e1 + cy2 * e2
    rho = np.linalg.norm(in_plane - (center - centroid), axis=1)
    minor = float(np.mean(np.hypot(rho - major, zeta)))
    if minor < 1e-6:
        minor = 1e-6
    return np.concatenate([center, normal, [major, minor]])


def ransac_torus(pts: np.ndarray, iterations: int = 500, tol: float = 8e-4,
                 seed: int = 0, min_inlier_fraction: float = 0.3) -> TorusFit:
    """Hypothesize-and-score torus fit, refined by least squares on inliers."""
    pts = np.asarray(pts, dtype=float)
    if len(pts) < 8:
        raise NoModel(f"need at least 8 points, got {len(pts)}")
    rng = np.random.default_rng(seed)
    best_count = -1
    best_params = None
    for _ in range(iterations):
        idx = rng.choice(len(pts), 4, replace=False)
        params = _torus_hypothesis(pts[idx])
        if params is None:
            continue
        res = np.abs(torus_residuals(params, pts))
        count = int((res < tol).sum())
        if count > best_count:
            best_count = count
            best_params = params
    if best_params is None:
        raise NoModel("no non-degenerate hypothesis")
    inliers = np.abs(torus_residuals(best_params, pts)) < tol
    if inliers.sum() >= 8:
        fit = least_squares(torus_residuals, best_params,
                            args=(pts[inliers],), method="lm", max_nfev=200)
        refined = fit.x
        # widen the band and refit twice: a tight band around an offset
        # hypothesis truncates asymmetrically and biases the center
        for _ in range(2):
            sel = np.abs(torus_residuals(refined, pts)) < 2.0 * tol
            if sel.sum() < 8:
                break
            refined = least_squares(torus_residuals, refined,
                                    args=(pts[sel],), method="lm",
                                    max_nfev=200).x
        res = np.abs(torus_residuals(refined, pts))
        if (res < tol).sum() >= best_count:
            best_params = refined
            inliers = res < tol
    frac = float(inliers.sum()) / len(pts)
    if frac < min_inlier_fraction:
        raise NoModel(f"inlier fraction {frac:.2f} < {min_inlier_fraction}")
    cx, cy, cz, nx, ny, nz, major, minor = best_params
    axis = np.array([nx, ny, nz])
    axis = axis / np.linalg.norm(axis)
    if axis[2] < 0:
        axis = -axis
    return TorusFit(center=np.array([cx, cy, cz]), axis=axis,
                    major_radius=abs(float(major)), minor_radius=abs(float(minor)),
                    inliers=int(inliers.sum()), inlier_fraction=frac)
