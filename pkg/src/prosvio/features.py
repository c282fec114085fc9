"""Horizontal-line RANSAC and corner feature extraction for stairs and obstacles.

A stair or obstacle seen in the sagittal plane is dominated by horizontal
surfaces (treads, floor, obstacle top). Two such lines are fitted one after
the other; the higher one carries the corner (step nose or obstacle edge)
and the points in a small box around that corner become the features used
for frame-to-frame alignment.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import FeatureBoxEmpty, FrameError, NoConsensus, TooFewPoints
from .pointcloud import Frame, Point2D, PointCloud2D

DEFAULT_INLIER_TOL = 0.01
DEFAULT_ITERATIONS = 200
DEFAULT_MIN_INLIERS = 10
DEFAULT_MAX_GAP = 0.02
DEFAULT_BOX_HEIGHT = 0.02  # d
DEFAULT_BOX_WIDTH = 0.05  # w
DEFAULT_GATE = 0.10
REFINE_STEPS = 10
END_GAP_FACTOR = 5.0  # tail gap, in median point spacings
END_DENSITY = 0.25  # tail density, as a fraction of the run's
END_REACH_GAPS = 2.5  # how far in from an end tails are searched, in max_gap


class TerrainType(enum.Enum):
    STAIR = "stair"
    OBSTACLE = "obstacle"
    FLAT = "flat"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"stairs": "stair", "obstacles": "obstacle", "ground": "flat", "level": "flat"}
        return cls(aliases.get(key, key))

    @property
    def has_corners(self):
        return self is not TerrainType.FLAT


@dataclass(frozen=True, eq=False)
class Line2D:
    """A horizontal line ``z = z_level``.

    ``inlier_indices`` holds every consensus inlier (indices into the cloud the
    line was fitted on); ``x_min``/``x_max`` span the largest gap-free run of
    those inliers, so stray points at the right height do not stretch the line.
    """

    z_level: float
    x_min: float
    x_max: float
    inlier_indices: np.ndarray
    median_z: float

    def __post_init__(self):
        if self.x_min > self.x_max:
            raise ValueError("x_min must not exceed x_max")

    @property
    def n_inliers(self):
        return len(self.inlier_indices)


@dataclass(eq=False)
class FeatureSet:
    points: PointCloud2D
    corner: Point2D
    terrain: TerrainType
    upper: Line2D | None = None
    lower: Line2D | None = None

    def mean(self):
        return self.points.mean()

    def __len__(self):
        return len(self.points)


def _count_within(sorted_z, centers, tol):
    lo = np.searchsorted(sorted_z, centers - tol, side="right")
    hi = np.searchsorted(sorted_z, centers + tol, side="left")
    return hi - lo


def _sparse_prefix(run, limit, reach):
    """Number of leading points of ``run`` forming a sparse tail before a wide gap.

    A prefix is dropped when it ends in a gap wider than ``limit``, starts
    within ``reach`` of the run end, and holds under END_DENSITY of the points
    the run's mean density would put there.
    """
    gaps = np.diff(run)
    density = (len(run) - 1) / (run[-1] - run[0])
    cut = 0
    for j in np.flatnonzero(gaps > limit):
        if run[j] - run[0] > reach:
            break
        if j + 1 < END_DENSITY * density * (run[j + 1] - run[0]):
            cut = j + 1
    return cut


def _dominant_run(x, max_gap):
    """Return (x_min, x_max) of the largest cluster of ``x`` with gaps <= max_gap.

    Sparse tails at either end (stray points at the line's height chained
    onto the surface) are trimmed so they cannot stretch the line.
    """
    xs = np.sort(x)
    breaks = np.flatnonzero(np.diff(xs) > max_gap)
    starts = np.concatenate(([0], breaks + 1))
    ends = np.concatenate((breaks, [len(xs) - 1]))
    best = int(np.argmax(ends - starts))  # first (leftmost) run wins ties
    run = xs[starts[best]:ends[best] + 1]
    if len(run) > 2 and run[-1] > run[0]:
        limit = END_GAP_FACTOR * float(np.median(np.diff(run)))
        reach = END_REACH_GAPS * max_gap
        lo = _sparse_prefix(run, limit, reach)
        hi = len(run) - 1 - _sparse_prefix(-run[::-1], limit, reach)
        if hi > lo:
            run = run[lo:hi + 1]
    return float(run[0]), float(run[-1])


def ransac_horizontal_line(
    cloud: PointCloud2D,
    inlier_tol: float = DEFAULT_INLIER_TOL,
    iterations: int = DEFAULT_ITERATIONS,
    rng_seed: int = 0,
    min_inliers: int = DEFAULT_MIN_INLIERS,
    max_gap: float = DEFAULT_MAX_GAP,
) -> Line2D:
    """Fit the horizontal line with the most inliers ``|z - z_level| < inlier_tol``.

    A horizontal line is fixed by one point, so every hypothesis is a single
    sampled point. The winning level is then moved to the median z of its
    inliers, re-selecting inliers, until it stops changing.
    """
    pts = cloud.points
    n = len(pts)
    if n < 2:
        raise TooFewPoints(f"need at least 2 points, got {n}")
    if inlier_tol <= 0 or iterations < 1:
        raise ValueError("inlier_tol must be positive and iterations >= 1")

    z = pts[:, 1]
    rng = np.random.default_rng(rng_seed)
    hypotheses = z[rng.integers(0, n, size=iterations)]
    sorted_z = np.sort(z)
    counts = _count_within(sorted_z, hypotheses, inlier_tol)
    best = int(np.argmax(counts))
    level = float(hypotheses[best])
    inliers = np.abs(z - level) < inlier_tol

    for _ in range(REFINE_STEPS):
        refined = float(np.median(z[inliers]))
        if refined == level:
            break
        level, inliers = refined, np.abs(z - refined) < inlier_tol

    count = int(inliers.sum())
    if count < min_inliers:
        raise NoConsensus(f"best horizontal line has {count} inliers (< {min_inliers})")
    idx = np.flatnonzero(inliers)
    x_min, x_max = _dominant_run(pts[idx, 0], max_gap)
    return Line2D(level, x_min, x_max, idx, float(np.median(z[idx])))


def _interval_gap(x, lo, hi):
    """Distance from ``x`` to the interval [lo, hi] (0 inside)."""
    return max(lo - x, 0.0, x - hi)


def extract_terrain_features(
    cloud: PointCloud2D,
    terrain: TerrainType = TerrainType.STAIR,
    d: float = DEFAULT_BOX_HEIGHT,
    w: float = DEFAULT_BOX_WIDTH,
    inlier_tol: float = DEFAULT_INLIER_TOL,
    iterations: int = DEFAULT_ITERATIONS,
    rng_seed: int = 0,
    min_inliers: int = DEFAULT_MIN_INLIERS,
    max_gap: float = DEFAULT_MAX_GAP,
) -> FeatureSet:
    """Extract the corner feature points of a stair step or an obstacle.

    Fits two horizontal lines (the second after removing the first one's
    inliers), takes the higher one by median z, picks its end nearest
    the lower line's extent and returns every cloud point within ``w`` of
    that end in x and within ``d`` of the line in z.
    """
    if cloud.frame is not Frame.GROUND:
        raise FrameError("feature extraction expects a ground-frame cloud")
    if d <= 0 or w <= 0:
        raise ValueError("box dimensions d and w must be positive")
    terrain = TerrainType.parse(terrain)
    ransac = dict(inlier_tol=inlier_tol, iterations=iterations,
                  min_inliers=min_inliers, max_gap=max_gap)

    first = ransac_horizontal_line(cloud, rng_seed=rng_seed, **ransac)
    remaining = np.ones(len(cloud), dtype=bool)
    remaining[first.inlier_indices] = False
    rest_idx = np.flatnonzero(remaining)
    try:
        second = ransac_horizontal_line(cloud.with_points(cloud.points[rest_idx]),
                                        rng_seed=rng_seed + 1, **ransac)
    except TooFewPoints as exc:
        raise NoConsensus("no points left for the second line") from exc
    second = Line2D(second.z_level, second.x_min, second.x_max,
                    rest_idx[second.inlier_indices], second.median_z)

    upper, lower = (first, second) if first.median_z >= second.median_z else (second, first)
    left_gap = _interval_gap(upper.x_min, lower.x_min, lower.x_max)
    right_gap = _interval_gap(upper.x_max, lower.x_min, lower.x_max)
    corner_x = upper.x_min if left_gap <= right_gap else upper.x_max
    corner = Point2D(corner_x, upper.z_level)

    pts = cloud.points
    in_box = (np.abs(pts[:, 0] - corner.x) <= w) & (np.abs(pts[:, 1] - corner.z) <= d)
    if not in_box.any():
        raise FeatureBoxEmpty(f"no points within the {d} x {w} box at {corner}")
    return FeatureSet(cloud.with_points(pts[in_box]), corner, terrain, upper, lower)


def associate_features(prev: FeatureSet, curr: FeatureSet, gate: float = DEFAULT_GATE) -> bool:
    """True when the two feature sets' mean points are closer than ``gate``."""
    if len(prev) == 0 or len(curr) == 0:
        raise ValueError("feature sets must be non-empty")
    return bool(np.linalg.norm(prev.mean() - curr.mean()) < gate)
