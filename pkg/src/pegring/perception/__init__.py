"""Synthetic point clouds and geometric recovery of rings and pegs."""

from .cloud import ColoredPointCloud, load_cloud_csv, render_cloud, save_cloud_csv, subsample
from .fitting import (
    NoModel,
    PlaneNotFound,
    TorusFit,
    euclidean_clusters,
    fit_plane_ransac,
    ransac_torus,
)
from .pipeline import PerceptionSystem, estimate_plane_and_pegs, segment_rings

__all__ = [
    "ColoredPointCloud",
    "NoModel",
    "PerceptionSystem",
    "PlaneNotFound",
    "TorusFit",
    "estimate_plane_and_pegs",
    "euclidean_clusters",
    "fit_plane_ransac",
    "load_cloud_csv",
    "ransac_torus",
    "render_cloud",
    "save_cloud_csv",
    "segment_rings",
    "subsample",
]
