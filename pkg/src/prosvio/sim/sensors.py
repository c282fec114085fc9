"""Synthetic depth frames (2D ray casting) and accelerometer streams."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..eskf import GRAVITY, ImuSample
from ..errors import NoIntersections
from ..pointcloud import Frame, PointCloud2D, PointCloud3D, Rotation2D
from .terrain import Terrain


@dataclass(frozen=True)
class ImuNoise:
    """Accelerometer noise for synthesis; zeros give a perfect sensor."""

    sigma_a: float = 0.05
    sigma_ab: float = 0.005

    def __post_init__(self):
        if self.sigma_a < 0 or self.sigma_ab < 0:
            raise ValueError("noise levels must be non-negative")


def ray_directions(fov, rays):
    """Ray angles in the camera frame, symmetric about the optical (+x) axis."""
    return np.linspace(-fov / 2, fov / 2, rays)


def cast(terrain: Terrain, origin, directions, max_range=np.inf, min_range=0.0):
    """Range along each world-frame unit direction to the first polyline hit (inf on miss)."""
    o = np.asarray(origin, dtype=float)
    d = np.asarray(directions, dtype=float)
    a, b = terrain.segments
    e = b - a
    rel = a - o
    denom = d[:, 0:1] * e[None, :, 1] - d[:, 1:2] * e[None, :, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        r = (rel[None, :, 0] * e[None, :, 1] - rel[None, :, 1] * e[None, :, 0]) / denom
        u = (rel[None, :, 0] * d[:, 1:2] - rel[None, :, 1] * d[:, 0:1]) / denom
    ok = (np.abs(denom) > 1e-15) & (u >= 0) & (u <= 1) & (r > min_range)
    r = np.where(ok, r, np.inf).min(axis=1)
    r[r > max_range] = np.inf
    return r


def render_depth(terrain: Terrain, camera_pose, camera_pitch, fov, rays, noise_std=0.0,
                 seed=0, max_range=4.0, min_range=0.1, timestamp=0.0) -> PointCloud2D:
    """Camera-frame sagittal scan of the terrain with Gaussian range noise.

    ``seed`` may be an int or a ``numpy.random.Generator``.
    """
    if not 0 < fov < np.pi:
        raise ValueError("fov must lie in (0, pi)")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    psi = ray_directions(fov, rays)
    local = np.column_stack([np.cos(psi), np.sin(psi)])
    world = Rotation2D(camera_pitch).apply(local)
    r = cast(terrain, camera_pose, world, max_range, min_range)
    hit = np.isfinite(r)
    if not hit.any():
        raise NoIntersections("no ray hit the terrain")
    ranges = r[hit]
    if noise_std > 0:
        ranges = ranges + rng.normal(0.0, noise_std, size=ranges.shape)
    return PointCloud2D(local[hit] * ranges[:, None], timestamp, Frame.CAMERA)


def add_lateral_spread(cloud: PointCloud2D, spread=0.04, seed=0) -> PointCloud3D:
    """Lift a sagittal scan to 3D with uniform lateral offsets in [-spread, spread]."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    y = rng.uniform(-spread, spread, size=len(cloud))
    pts = np.column_stack([cloud.points[:, 0], y, cloud.points[:, 1]])
    return PointCloud3D(pts, cloud.timestamp)


def simulate_imu(times, accel_world, pitches, noise: ImuNoise = ImuNoise(), seed=0, gravity=GRAVITY,
                 bias0=(0.0, 0.0)):
    """Accelerometer samples ``R^-1 (a_w - g) + a_b + a_n`` with a random-walk bias.

    Returns the sample list and the (N, 2) true bias trajectory.
    """
    times = np.asarray(times, dtype=float)
    acc = np.asarray(accel_world, dtype=float).reshape(-1, 2)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n = len(times)
    dt = np.diff(times, prepend=times[0])
    steps = rng.normal(0.0, 1.0, size=(n, 2)) * (noise.sigma_ab * np.sqrt(dt))[:, None]
    bias = np.asarray(bias0, dtype=float) + np.cumsum(steps, axis=0)
    white = rng.normal(0.0, noise.sigma_a, size=(n, 2))
    samples = []
    for k in range(n):
        rot = Rotation2D(float(pitches[k]))
        a_m = rot.inverse().apply(acc[k] - gravity) + bias[k] + white[k]
        samples.append(ImuSample(float(times[k]), a_m, rot))
    return samples, bias
