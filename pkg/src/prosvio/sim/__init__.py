"""Synthetic stair/obstacle walking datasets with ground truth."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from ..dataset import Dataset, GroundTruth
from ..errors import NoIntersections
from ..features import TerrainType
from ..kinematics import ProsthesisModel
from ..pointcloud import PointCloud3D
from .gait import GaitSpec, GaitTruth, cycloid, gen_gait
from .sensors import ImuNoise, add_lateral_spread, cast, render_depth, simulate_imu
from .terrain import Terrain, TerrainSpec, gen_terrain

log = logging.getLogger(__name__)

__all__ = [
    "GaitSpec", "GaitTruth", "ImuNoise", "SimRun", "Terrain", "TerrainSpec",
    "add_lateral_spread", "cycloid", "gen_gait", "gen_terrain", "render_depth",
    "simulate", "simulate_imu", "stream_times", "visible_window",
]


@dataclass(eq=False)
class SimRun:
    dataset: Dataset
    terrain: Terrain
    gait: GaitTruth
    imu_bias: np.ndarray


def stream_times(duration, rate):
    """Sample times ``k / rate`` covering [0, duration]."""
    n = int(math.floor(duration * rate + 1e-9))
    return np.arange(n + 1) / rate


def _corner_visible(terrain, corner, cam, pitch, spec: GaitSpec):
    rel = corner - cam
    dist = float(np.hypot(*rel))
    if not spec.min_range < dist <= spec.max_range:
        return False
    bearing = math.atan2(rel[1], rel[0]) - pitch
    bearing = (bearing + math.pi) % (2 * math.pi) - math.pi
    if abs(bearing) > spec.fov / 2:
        return False
    r = cast(terrain, cam, (rel / dist)[None, :], spec.max_range, spec.min_range)[0]
    return r >= dist - 1e-6


def visible_window(terrain: Terrain, gait: GaitTruth, times):
    """First contiguous interval of ``times`` in which the nearest obstacle edge is in view."""
    edges = terrain.edges()
    if len(edges) == 0:
        return None
    corner = edges[0]
    knee = gait.knee(times)[0]
    pitch = gait.camera_pitch(times)
    vis = [_corner_visible(terrain, corner, knee[i], pitch[i], gait.spec) for i in range(len(times))]
    if not any(vis):
        return None
    first = vis.index(True)
    last = first
    while last + 1 < len(vis) and vis[last + 1]:
        last += 1
    return float(times[first]), float(times[last])


def simulate(terrain_spec: TerrainSpec = TerrainSpec(), gait_spec: GaitSpec = GaitSpec(),
             imu_noise: ImuNoise = ImuNoise(), model: ProsthesisModel = ProsthesisModel()) -> SimRun:
    """Generate a full dataset: depth frames, IMU, encoders and ground truth.

    Encoder readings are taken at the depth-frame timestamps. Ground truth
    (knee and toe) is sampled at ``gait_spec.truth_rate``.
    """
    terrain = gen_terrain(terrain_spec)
    gait = gen_gait(terrain, gait_spec, model)
    seed = gait_spec.rng_seed
    depth_rng = np.random.default_rng([seed, 1])
    imu_rng = np.random.default_rng([seed, 2])

    cam_t = stream_times(gait.duration, gait_spec.camera_fps)
    cam_pos = gait.knee(cam_t)[0]
    cam_pitch = gait.camera_pitch(cam_t)
    frames = []
    blind = 0
    for t, pos, pitch in zip(cam_t, cam_pos, cam_pitch):
        try:
            scan = render_depth(terrain, pos, pitch, gait_spec.fov, gait_spec.rays,
                                gait_spec.depth_noise_std, depth_rng, gait_spec.max_range,
                                gait_spec.min_range, float(t))
        except NoIntersections:
            blind += 1
            frames.append(PointCloud3D(np.zeros((0, 3)), float(t)))
            continue
        frames.append(add_lateral_spread(scan, gait_spec.lateral_spread, depth_rng))

    if blind:
        log.warning("camera saw no terrain in %d of %d frames; wrote them empty", blind, len(cam_t))

    imu_t = stream_times(gait.duration, gait_spec.imu_rate)
    _, _, acc = gait.knee(imu_t)
    imu, bias = simulate_imu(imu_t, acc, gait.camera_pitch(imu_t), imu_noise, imu_rng)

    encoders = gait.joint_readings(cam_t)

    truth_t = stream_times(gait.duration, gait_spec.truth_rate)
    leg = gait.leg(truth_t)
    truth = GroundTruth(truth_t, leg["knee"], leg["toe"])

    window = None
    if terrain.kind is TerrainType.OBSTACLE:
        window = visible_window(terrain, gait, cam_t)
    ds = Dataset(frames, imu, encoders, terrain.kind, gait_spec.camera_fps, gait_spec.imu_rate,
                 tuple(float(v) for v in cam_pos[0]), truth, window)
    return SimRun(ds, terrain, gait, bias)
