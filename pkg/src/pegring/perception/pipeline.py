"""The vision flow: subsample, one-shot plane/peg estimation, ring recovery."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import quat
from ..awareness import ArmObservation, Observation, PegObservation
from .cloud import BASE_LABEL, ColoredPointCloud, render_cloud, subsample
from .fitting import (
    NoModel,
    Plane,
    PlaneNotFound,
    euclidean_clusters,
    fit_plane_ransac,
    ransac_torus,
)

RING_COLORS = ("blue", "green", "red", "yellow")
PEG_MIN_EXTENT = 0.008  # pegs are tall; rings have tube-height extent only


def estimate_plane_and_pegs(cloud: ColoredPointCloud, cluster_tol: float = 0.004,
                            plane_tol: float = 0.001, seed: int = 0):
    """First-frame estimation of the board plane and all peg poses.

    The plane is fitted on base plus grey points; pegs are the tall
    same-color clusters above it, with axis and base from a principal
    direction fit.  Results are frozen by the caller afterwards.
    """
    base_pts = np.vstack([
        cloud.of_label(BASE_LABEL).reshape(-1, 3),
        cloud.of_label("grey").reshape(-1, 3),
    ]) if len(cloud) else np.zeros((0, 3))
    plane = fit_plane_ransac(base_pts, tol=plane_tol, seed=seed)
    pegs = []
    labels = sorted(set(cloud.labels) - {BASE_LABEL})
    for color in labels:
        pts = cloud.of_label(color)
        above = pts[plane.signed_distance(pts) > 2e-3]
        if len(above) < 8:
            continue
        for members in euclidean_clusters(above, cluster_tol, min_size=8):
            cluster = above[members]
            heights = plane.signed_distance(cluster)
            if heights.max() - heights.min() < PEG_MIN_EXTENT:
                continue  # flat cluster: a ring, not a peg
            centroid = cluster.mean(axis=0)
            _u, _sv, vt = np.linalg.svd(cluster - centroid, full_matrices=False)
            axis = vt[0]
            if axis @ plane.normal < 0:
                axis = -axis
            # slide the centroid down the axis onto the plane
            denom = float(axis @ plane.normal)
            t = (plane.offset - centroid @ plane.normal) / denom
            base = centroid + t * axis
            height = float(plane.signed_distance(cluster[None, :][0]).max())
            radial = cluster - base
            zeta = radial @ axis
            lateral = np.linalg.norm(radial - np.outer(zeta, axis), axis=1)
            pegs.append({
                "color": color,
                "base": base,
                "height": height,
                "radius": float(np.median(lateral)),
            })
    pegs.sort(key=lambda p: (p["color"], round(p["base"][0], 6),
                             round(p["base"][1], 6)))
    out = []
    counts: dict = {}
    for p in pegs:
        i = counts.get(p["color"], 0)
        counts[p["color"]] = i + 1
        out.append(PegObservation(
            peg_id=f"{p['color']}{i}", color=p["color"], base=p["base"],
            height=p["height"], radius=p["radius"]))
    return plane, tuple(out)


def _plausible_ring(fit, ring_major: float, ring_minor: float) -> bool:
    """Shape gate: peg cylinders also admit degenerate torus fits, so a
    cluster only counts as the ring if the fitted radii are ring-like."""
    return (0.5 * ring_major <= fit.major_radius <= 1.5 * ring_major
            and fit.minor_radius <= 3.0 * ring_minor)


def _annulus_like(cluster: np.ndarray, ring_major: float) -> bool:
    """A ring is wide in two principal directions (diameter ~ 2 major radii);
    a peg is wide in only one, whatever its orientation."""
    centered = cluster - cluster.mean(axis=0)
    _u, _sv, vt = np.linalg.svd(centered, full_matrices=False)
    middle_extent = float(np.ptp(centered @ vt[1]))
    return middle_extent >= 1.2 * ring_major


def segment_rings(cloud: ColoredPointCloud, pegs, cluster_tol: float = 0.004,
                  iterations: int = 500, tol: float = 8e-4, seed: int = 0,
                  ring_major: float = 0.008, ring_minor: float = 0.0015):
    """Per color: cluster, torus-fit each cluster, keep the best-fitting one.

    Colors without a valid fit are simply absent from the result (that is
    the signal the ring was not retrieved, not an error).
    """
    found = {}
    points = {}
    for ci, color in enumerate(RING_COLORS):
        pts = cloud.of_label(color)
        if len(pts) < 8:
            continue
        best = None
        best_members = None
        for ki, members in enumerate(euclidean_clusters(pts, cluster_tol,
                                                        min_size=8)):
            cluster = pts[members]
            if not _annulus_like(cluster, ring_major):
                continue
            try:
                fit = ransac_torus(cluster, iterations=iterations, tol=tol,
                                   seed=seed * 101 + ci * 17 + ki)
            except NoModel:
                continue
            if not _plausible_ring(fit, ring_major, ring_minor):
                continue
            if best is None or fit.inlier_fraction > best.inlier_fraction:
                best = fit
                best_members = members
        if best is not None:
            found[color] = best
            points[color] = pts[best_members]
    return found, points


class PerceptionSystem:
    """Stateful vision pipeline producing Observations from rendered clouds.

    Plane and pegs are estimated once on the first frame and frozen; ring
    poses are recovered every frame.  Arm poses come from kinematics, not
    from the cloud.
    """

    def __init__(self, density: float = 200.0, sigma: float = 0.0,
                 leaf: float = 0.001, cluster_tol: float = 0.004,
                 iterations: int = 150, tol: float = 8e-4, seed: int = 0):
        self.density = density
        self.sigma = sigma
        self.leaf = leaf
        self.cluster_tol = cluster_tol
        self.iterations = iterations
        self.tol = tol
        self.seed = seed
        self.frame = 0
        self.plane: Plane | None = None
        self.pegs: tuple | None = None

    def observe(self, scene) -> Observation:
        self.frame += 1
        cloud = render_cloud(scene, density=self.density, sigma=self.sigma,
                             seed=self.seed * 100003 + self.frame)
        sub = subsample(cloud, self.leaf)
        if self.pegs is None:
            self.plane, self.pegs = estimate_plane_and_pegs(
                sub, cluster_tol=self.cluster_tol, seed=self.seed)
        fits, points = segment_rings(
            sub, self.pegs, cluster_tol=self.cluster_tol,
            iterations=self.iterations, tol=self.tol,
            seed=self.seed * 7919 + self.frame,
            ring_major=scene.geometry.ring_major_radius,
            ring_minor=scene.geometry.ring_minor_radius)
        ring_poses = {
            color: (fit.center, quat.pointing(fit.axis))
            for color, fit in fits.items()
        }
        arms = {
            name: ArmObservation(name=name, pos=a.pos.copy(), q=a.q.copy(),
                                 gripper=a.gripper)
            for name, a in scene.arms.items()
        }
        return Observation(time=scene.time, source="perception",
                           ring_poses=ring_poses, ring_points=points,
                           pegs=self.pegs, arms=arms)
