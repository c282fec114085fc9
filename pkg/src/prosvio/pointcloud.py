"""Point-cloud types and the sagittal preprocessing chain.

Coordinates follow the sagittal convention used throughout the package:
x forward, y lateral, z up. A depth frame is cut to a thin lateral slab,
flattened to (x, z), rotated into the ground-aligned frame with the IMU
pitch and finally smoothed with a k-nearest-neighbour centroid filter.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.spatial import cKDTree

from .errors import FrameError

DEFAULT_HALF_WIDTH = 0.05
DEFAULT_KNN = 8
DEFAULT_MAX_POINTS = 5000


class Frame(enum.Enum):
    CAMERA = "camera"
    GROUND = "ground"


class Point2D(NamedTuple):
    x: float
    z: float


def _as_points(points, dim):
    arr = np.asarray(points, dtype=float)
    if arr.size == 0:
        return np.zeros((0, dim))
    arr = arr.reshape(-1, dim)
    if not np.all(np.isfinite(arr)):
        raise ValueError("point coordinates must be finite")
    return arr


@dataclass(eq=False)
class PointCloud3D:
    """Raw depth frame, ``points`` is an (N, 3) array of (x, y, z) in metres."""

    points: np.ndarray
    timestamp: float = 0.0

    def __post_init__(self):
        self.points = _as_points(self.points, 3)
        if not math.isfinite(self.timestamp) or self.timestamp < 0:
            raise ValueError(f"invalid timestamp {self.timestamp!r}")

    def __len__(self):
        return len(self.points)


@dataclass(eq=False)
class PointCloud2D:
    """Sagittal cloud, ``points`` is an (N, 2) array of (x, z) in metres."""

    points: np.ndarray
    timestamp: float = 0.0
    frame: Frame = Frame.CAMERA

    def __post_init__(self):
        self.points = _as_points(self.points, 2)

    def __len__(self):
        return len(self.points)

    def with_points(self, points, frame=None):
        return PointCloud2D(points, self.timestamp, self.frame if frame is None else frame)

    def translated(self, offset):
        return self.with_points(self.points + np.asarray(offset, dtype=float))

    def mean(self):
        return self.points.mean(axis=0)


@dataclass(frozen=True)
class Rotation2D:
    """Counter-clockwise rotation in the x-z plane about the lateral axis.

    Positive angles turn +x towards +z (nose up for a forward-looking camera).
    """

    angle: float = 0.0

    @property
    def matrix(self):
        c, s = math.cos(self.angle), math.sin(self.angle)
        return np.array([[c, -s], [s, c]])

    def inverse(self):
        return Rotation2D(-self.angle)

    def apply(self, vectors):
        """Rotate a single 2-vector or an (N, 2) array of row vectors."""
        v = np.asarray(vectors, dtype=float)
        return v @ self.matrix.T


def project_sagittal(cloud: PointCloud3D, half_width: float = DEFAULT_HALF_WIDTH) -> PointCloud2D:
    """Keep points with ``|y| < half_width`` and drop the lateral coordinate."""
    if half_width <= 0:
        raise ValueError("half_width must be positive")
    pts = cloud.points
    keep = np.abs(pts[:, 1]) < half_width
    return PointCloud2D(pts[keep][:, [0, 2]], cloud.timestamp, Frame.CAMERA)


def to_ground_frame(cloud: PointCloud2D, rot: Rotation2D) -> PointCloud2D:
    if cloud.frame is not Frame.CAMERA:
        raise FrameError("cloud is already in the ground frame")
    return PointCloud2D(rot.apply(cloud.points), cloud.timestamp, Frame.GROUND)


def to_camera_frame(cloud: PointCloud2D, rot: Rotation2D) -> PointCloud2D:
    """Inverse of :func:`to_ground_frame` for the same rotation."""
    if cloud.frame is not Frame.GROUND:
        raise FrameError("cloud is already in the camera frame")
    return PointCloud2D(rot.inverse().apply(cloud.points), cloud.timestamp, Frame.CAMERA)


def smooth_knn(cloud: PointCloud2D, k: int = DEFAULT_KNN) -> PointCloud2D:
    """Replace every point by the centroid of its k nearest neighbours (itself included)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    n = len(cloud)
    k = min(k, n)
    if n == 0 or k == 1:
        return cloud.with_points(cloud.points.copy())
    _, idx = cKDTree(cloud.points).query(cloud.points, k=k)
    return cloud.with_points(cloud.points[idx].mean(axis=1))


def subsample_uniform(cloud: PointCloud2D, max_points: int = DEFAULT_MAX_POINTS) -> PointCloud2D:
    n = len(cloud)
    if n <= max_points:
        return cloud
    idx = np.linspace(0, n - 1, max_points).round().astype(int)
    return cloud.with_points(cloud.points[idx])


@dataclass
class PreprocessConfig:
    half_width: float = DEFAULT_HALF_WIDTH
    knn: int = DEFAULT_KNN
    max_points: int = DEFAULT_MAX_POINTS

    def validate(self):
        if self.half_width <= 0:
            raise ValueError("half_width must be positive")
        if self.knn < 1:
            raise ValueError("knn must be >= 1")
        if self.max_points < 1:
            raise ValueError("max_points must be >= 1")


def preprocess(cloud: PointCloud3D, rot: Rotation2D, cfg: PreprocessConfig | None = None) -> PointCloud2D:
    """Project, rotate into the ground frame, cap the size and smooth."""
    cfg = cfg or PreprocessConfig()
    flat = project_sagittal(cloud, cfg.half_width)
    ground = to_ground_frame(flat, rot)
    return smooth_knn(subsample_uniform(ground, cfg.max_points), cfg.knn)
