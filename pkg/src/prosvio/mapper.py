"""Keyframe selection and the accumulated 2D environment map."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyCloud, FrameError
from .pointcloud import Frame, PointCloud2D, smooth_knn

KEYFRAME_MIN = 0.01
KEYFRAME_MAX = 0.05


def select_keyframe(displacement_since_last: float, lo: float = KEYFRAME_MIN, hi: float = KEYFRAME_MAX) -> bool:
    if displacement_since_last < 0:
        raise ValueError("displacement must be non-negative")
    return lo <= displacement_since_last <= hi


@dataclass(eq=False)
class Keyframe:
    pose: np.ndarray
    cloud: PointCloud2D  # ground frame, already shifted into map coordinates


@dataclass(eq=False)
class Map2D:
    keyframes: list = field(default_factory=list)

    def __len__(self):
        return len(self.keyframes)

    @property
    def n_points(self):
        return sum(len(kf.cloud) for kf in self.keyframes)

    def points(self):
        if not self.keyframes:
            return np.zeros((0, 2))
        return np.vstack([kf.cloud.points for kf in self.keyframes])

    def labelled_points(self):
        """(N, 3) array of x, z, keyframe index."""
        rows = [np.column_stack([kf.cloud.points, np.full(len(kf.cloud), i)])
                for i, kf in enumerate(self.keyframes)]
        return np.vstack(rows) if rows else np.zeros((0, 3))

    def smoothed_points(self, k=8):
        cloud = PointCloud2D(self.points(), frame=Frame.GROUND)
        return smooth_knn(cloud, k).points

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "z", "keyframe_index"])
            for x, z, i in self.labelled_points():
                writer.writerow([repr(float(x)), repr(float(z)), int(i)])


def add_keyframe(map_: Map2D, pose, cloud: PointCloud2D) -> Map2D:
    """Append ``cloud`` (ground frame, camera-centred) shifted by ``pose``."""
    if len(cloud) == 0:
        raise EmptyCloud("cannot add an empty keyframe")
    if cloud.frame is not Frame.GROUND:
        raise FrameError("keyframe clouds must be in the ground frame")
    pose = np.asarray(pose, dtype=float).reshape(2).copy()
    map_.keyframes.append(Keyframe(pose, cloud.translated(pose)))
    return map_


class KeyframeSelector:
    """Tracks the reference pose that keyframe displacements are measured from.

    Displacement is taken from the last keyframe. A frame that has already
    moved past the upper bound is skipped and becomes the new reference, so
    one fast frame cannot stall keyframing for the rest of the run.
    """

    def __init__(self, lo=KEYFRAME_MIN, hi=KEYFRAME_MAX):
        self.lo, self.hi = lo, hi
        self.reference = None
        self.last_keyframe = None

    def offer(self, pose):
        pose = np.asarray(pose, dtype=float).reshape(2)
        if self.reference is None:
            self.reference = self.last_keyframe = pose.copy()
            return True
        moved = float(np.linalg.norm(pose - self.reference))
        if select_keyframe(moved, self.lo, self.hi) and np.linalg.norm(pose - self.last_keyframe) >= self.lo:
            self.reference = self.last_keyframe = pose.copy()
            return True
        if moved > self.hi:
            self.reference = pose.copy()
        return False
