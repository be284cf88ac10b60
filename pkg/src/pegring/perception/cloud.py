"""Colored point clouds: synthetic rendering, voxel decimation, CSV fixtures."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import quat

BASE_LABEL = "base"
# the board is sampled sparser than the small objects
BASE_DENSITY_FACTOR = 0.05


@dataclass(frozen=True)
class ColoredPointCloud:
    """World-frame points with per-point color labels."""

    positions: np.ndarray  # (n, 3) float
    labels: np.ndarray     # (n,) unicode

    def __post_init__(self):
        if len(self.positions) != len(self.labels):
            raise ValueError("positions and labels must align")
        if len(self.positions) and not np.all(np.isfinite(self.positions)):
            raise ValueError("non-finite coordinates")

    def __len__(self) -> int:
        return len(self.positions)

    def of_label(self, label: str) -> np.ndarray:
        return self.positions[self.labels == label]

    @staticmethod
    def concatenate(parts) -> "ColoredPointCloud":
        parts = [p for p in parts if len(p)]
        if not parts:
            return ColoredPointCloud(np.zeros((0, 3)), np.array([], dtype="<U8"))
        return ColoredPointCloud(
            np.vstack([p.positions for p in parts]),
            np.concatenate([p.labels for p in parts]))


def _sample_torus(rng, center, q, major, minor, count) -> np.ndarray:
    """Area-uniform torus surface samples (rejection in the tube angle)."""
    out = np.zeros((count, 3))
    got = 0
    while got < count:
        need = count - got
        u = rng.uniform(0.0, 2 * np.pi, need * 2)
        v = rng.uniform(0.0, 2 * np.pi, need * 2)
        accept = rng.uniform(0.0, 1.0, need * 2) <= \
            (major + minor * np.cos(v)) / (major + minor)
        u, v = u[accept][:need], v[accept][:need]
        local = np.stack([
            (major + minor * np.cos(v)) * np.cos(u),
            (major + minor * np.cos(v)) * np.sin(u),
            minor * np.sin(v),
        ], axis=1)
        out[got:got + len(u)] = local
        got += len(u)
    rot = quat.to_matrix(q)
    return np.asarray(center)[None, :] + out @ rot.T


def _sample_cylinder(rng, base, height, radius, count) -> np.ndarray:
    """Lateral surface plus cap of a vertical peg."""
    lateral_area = 2 * np.pi * radius * height
    cap_area = np.pi * radius * radius
    n_cap = int(round(count * cap_area / (lateral_area + cap_area)))
    n_side = count - n_cap
    theta = rng.uniform(0.0, 2 * np.pi, n_side)
    z = rng.uniform(0.0, height, n_side)
    side = np.stack([radius * np.cos(theta), radius * np.sin(theta), z], axis=1)
    rr = radius * np.sqrt(rng.uniform(0.0, 1.0, n_cap))
    th = rng.uniform(0.0, 2 * np.pi, n_cap)
    cap = np.stack([rr * np.cos(th), rr * np.sin(th),
                    np.full(n_cap, height)], axis=1)
    return np.asarray(base)[None, :] + np.vstack([side, cap])


def render_cloud(scene, density: float = 200.0, sigma: float = 0.0,
                 seed: int = 0) -> ColoredPointCloud:
    """Synthesize the camera view of a scene.

    `density` is points per square centimeter on object surfaces (the board
    is sampled sparser); `sigma` is isotropic Gaussian noise in meters.
    Hidden rings emit nothing.  Deterministic per seed.
    """
    if density <= 0:
        raise ValueError("density must be positive")
    rng = np.random.default_rng(seed)
    g = scene.geometry
    parts = []
    for color in sorted(scene.rings):
        ring = scene.rings[color]
        if not scene.ring_visible(ring):
            continue
        area_cm2 = 4 * np.pi ** 2 * g.ring_major_radius * g.ring_minor_radius * 1e4
        n = max(int(round(density * area_cm2)), 24)
        pts = _sample_torus(rng, ring.pos, ring.q,
                            g.ring_major_radius, g.ring_minor_radius, n)
        parts.append(ColoredPointCloud(pts, np.full(n, color, dtype="<U8")))
    for peg in g.pegs:
        area_cm2 = (2 * np.pi * peg.radius * peg.height
                    + np.pi * peg.radius ** 2) * 1e4
        n = max(int(round(density * area_cm2)), 24)
        pts = _sample_cylinder(rng, peg.base_point, peg.height, peg.radius, n)
        parts.append(ColoredPointCloud(pts, np.full(n, peg.color, dtype="<U8")))
    half = g.base_size / 2
    base_n = max(int(round(density * BASE_DENSITY_FACTOR
                           * (g.base_size * 100) ** 2)), 64)
    base_pts = np.stack([
        rng.uniform(-half, half, base_n),
        rng.uniform(-half, half, base_n),
        np.zeros(base_n),
    ], axis=1)
    parts.append(ColoredPointCloud(base_pts,
                                   np.full(base_n, BASE_LABEL, dtype="<U8")))
    cloud = ColoredPointCloud.concatenate(parts)
    if sigma > 0:
        noisy = cloud.positions + rng.normal(0.0, sigma, cloud.positions.shape)
        cloud = ColoredPointCloud(noisy, cloud.labels)
    return cloud


def subsample(cloud: ColoredPointCloud, leaf: float) -> ColoredPointCloud:
    """Voxel-grid decimation: one centroid per (color, voxel)."""
    if leaf <= 0:
        raise ValueError("leaf size must be positive")
    if len(cloud) == 0:
        return cloud
    keys = np.floor(cloud.positions / leaf).astype(np.int64)
    buckets: dict = {}
    for i in range(len(cloud)):
        k = (cloud.labels[i], keys[i, 0], keys[i, 1], keys[i, 2])
        acc = buckets.get(k)
        if acc is None:
            buckets[k] = [cloud.positions[i].copy(), 1]
        else:
            acc[0] += cloud.positions[i]
            acc[1] += 1
    items = sorted(buckets.items(), key=lambda kv: kv[0])
    positions = np.array([v[0] / v[1] for _, v in items])
    labels = np.array([k[0] for k, _ in items], dtype="<U8")
    return ColoredPointCloud(positions, labels)


def save_cloud_csv(cloud: ColoredPointCloud, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "z", "label"])
        for p, label in zip(cloud.positions, cloud.labels):
            w.writerow([repr(float(v)) for v in p] + [label])


def load_cloud_csv(path) -> ColoredPointCloud:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["x", "y", "z", "label"]:
            raise ValueError(f"{path}: expected header x,y,z,label")
        pos, labels = [], []
        for row in reader:
            if not row:
                continue
            pos.append([float(v) for v in row[:3]])
            labels.append(row[3])
    return ColoredPointCloud(np.array(pos, dtype=float),
                             np.array(labels, dtype="<U8"))
