"""Event-driven estimator: depth frames, IMU and encoders in, per-frame leg estimates out."""
from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import RunConfig
from .dataset import Dataset, EventKind, FrameEvent
from .eskf import GRAVITY, Filter, ImuSample, NominalState
from .evalkit import AteReport, Trajectory, compute_ate, timing_summary
from .errors import NonMonotonicTime, ProsvioError
from .features import FeatureSet, TerrainType, associate_features, extract_terrain_features
from .icp import Displacement2D, icp_translation
from .kinematics import JointReading, LegPose, forward_kinematics
from .mapper import KeyframeSelector, Map2D, add_keyframe
from .pointcloud import Rotation2D, preprocess

log = logging.getLogger(__name__)

TRAJECTORY_HEADER = ["t", "knee_x", "knee_z", "ankle_x", "ankle_z", "heel_x", "heel_z",
                     "toe_x", "toe_z", "visual_used"]
STAGES = ("preprocess", "features", "icp", "fusion", "kinematics", "mapping")


@dataclass(eq=False)
class EstimateRecord:
    timestamp: float
    knee_position: np.ndarray
    leg_pose: LegPose | None
    visual_used: bool
    icp_iterations: int
    latency: dict = field(default_factory=dict)  # ms per stage
    keyframe: bool = False

    def row(self):
        pose = self.leg_pose
        parts = [self.knee_position]
        if pose is None:
            parts += [np.full(2, np.nan)] * 3
        else:
            parts += [pose.ankle, pose.heel, pose.toe]
        vals = [self.timestamp, *np.concatenate(parts)]
        return [repr(float(v)) for v in vals] + [str(int(self.visual_used))]


class Estimator:
    """Consumes a timestamp-ordered event stream; one instance per run."""

    def __init__(self, config: RunConfig | None = None, terrain=TerrainType.STAIR,
                 initial_position=(0.0, 0.0), t0=None):
        self.config = config or RunConfig()
        self.terrain = TerrainType.parse(terrain)
        self.initial_position = np.asarray(initial_position, dtype=float).reshape(2)
        self.filter: Filter | None = None
        self._t0 = t0
        self.anchor = None  # chained visual position when prev_features were observed
        self.anchor_filter_p = None  # filter position at that same frame
        self.prev_features: FeatureSet | None = None
        self.latest_imu: ImuSample | None = None
        self.prev_imu: ImuSample | None = None
        self._input = None  # (body acceleration, pitch) at the filter's current time
        self._gap_warned = None  # IMU sample whose following gap was already reported
        self.latest_joints: JointReading | None = None
        self.selector = KeyframeSelector(self.config.keyframes.lo, self.config.keyframes.hi)
        self.map = Map2D()
        self.last_timestamp = -math.inf
        self.frame_index = 0

    def _ensure_filter(self, t):
        if self.filter is None:
            cfg = self.config
            t0 = t if self._t0 is None else self._t0
            nominal = NominalState(self.initial_position.copy(), np.zeros(2), np.zeros(2), GRAVITY.copy())
            self.filter = Filter(t0, cfg.noise, nominal, cfg.initial_cov)

    def _input_at(self, t):
        """(body acceleration, pitch) at ``t`` from the last two IMU samples.

        ``hold`` returns the latest sample; ``linear`` extrapolates the line
        through the last two samples, which removes the half-sample lag a
        held input adds during fast swing-phase accelerations.
        """
        cur, prev = self.latest_imu, self.prev_imu
        if self.config.imu_interpolation == "hold" or prev is None:
            return cur.accel_body, cur.rot.angle
        span = cur.timestamp - prev.timestamp
        s = min((t - cur.timestamp) / span, 1.0)  # never extrapolate past one sample period
        return (cur.accel_body + s * (cur.accel_body - prev.accel_body),
                cur.rot.angle + s * (cur.rot.angle - prev.rot.angle))

    def _propagate(self, t, end=None):
        """Advance the filter to ``t`` with a piecewise-linear input.

        ``end`` is the (acceleration, pitch) at ``t`` when a real sample is
        available there; otherwise it is extrapolated. Each step feeds the
        filter the input at the step midpoint, which is exact for the
        trapezoid rule on a linear segment.
        """
        f = self.filter
        if self.latest_imu is None or not t > f.last_timestamp:
            return
        if end is None or self.config.imu_interpolation == "hold":
            end = self._input_at(t)
        a0, th0 = self._input
        a1, th1 = end
        dt = t - f.last_timestamp
        n = max(1, math.ceil(dt / f.max_dt - 1e-9))
        silent = t - self.latest_imu.timestamp
        if (n > 1 or silent > f.max_dt) and self._gap_warned is not self.latest_imu:
            self._gap_warned = self.latest_imu
            log.warning("IMU gap after t=%.3f; bridging by interpolation", self.latest_imu.timestamp)
        start = f.last_timestamp
        for k in range(1, n + 1):
            tk = t if k == n else start + dt * k / n
            mid = (k - 0.5) / n
            if self.config.imu_interpolation == "hold":
                acc, th = a0, th0
            else:
                acc, th = a0 + mid * (a1 - a0), th0 + mid * (th1 - th0)
            f.predict(ImuSample(tk, acc, Rotation2D(th)))
        self._input = end

    def process_event(self, ev: FrameEvent) -> EstimateRecord | None:
        if ev.timestamp < self.last_timestamp:
            raise NonMonotonicTime(f"event at {ev.timestamp} precedes {self.last_timestamp}")
        self.last_timestamp = ev.timestamp
        self._ensure_filter(ev.timestamp)
        if ev.kind is EventKind.IMU:
            sample = ev.payload
            if self.latest_imu is not None:
                self._propagate(ev.timestamp, (sample.accel_body, sample.rot.angle))
            self.prev_imu, self.latest_imu = self.latest_imu, sample
            self._input = (sample.accel_body, sample.rot.angle)
            return None
        if ev.kind is EventKind.ENCODERS:
            self.latest_joints = ev.payload
            return None
        return self._process_depth(ev)

    def _visual(self, cloud, latency):
        """Preprocess, extract, associate and register; returns (measurement, iterations)."""
        cfg = self.config
        f = self.filter
        tic = time.perf_counter()
        ground = preprocess(cloud, Rotation2D(self._input[1]), cfg.preprocess)
        latency["preprocess"] = _ms(tic)
        self._ground = ground
        if not self.terrain.has_corners:
            return None, 0

        fc = cfg.features
        tic = time.perf_counter()
        try:
            feats = extract_terrain_features(ground, self.terrain, fc.d, fc.w, fc.inlier_tol,
                                             fc.iterations, cfg.seed + self.frame_index,
                                             fc.min_inliers, fc.max_gap)
        except ProsvioError as exc:
            latency["features"] = _ms(tic)
            log.debug("frame %d: features unavailable (%s)", self.frame_index, exc)
            return None, 0
        latency["features"] = _ms(tic)
        self._fresh_features = True

        prev, anchor = self.prev_features, self.anchor
        self.prev_features = feats
        if prev is None or anchor is None:
            return None, 0
        if not associate_features(prev, feats, fc.gate):
            log.debug("frame %d: association failed, re-anchoring", self.frame_index)
            return None, 0

        tic = time.perf_counter()
        seed = Displacement2D.from_vector(f.p - self.anchor_filter_p)
        res = icp_translation(feats.points, prev.points, seed, cfg.icp.t_th, cfg.icp.max_iter)
        latency["icp"] = _ms(tic)
        if not res.converged:
            log.debug("frame %d: ICP did not converge", self.frame_index)
            return None, res.iterations
        gate = cfg.icp.max_innovation
        if gate is not None and np.linalg.norm(res.t.vector - seed.vector) > gate:
            log.debug("frame %d: registration disagrees with the inertial prediction", self.frame_index)
            return None, res.iterations
        return anchor + res.t.vector, res.iterations

    def _process_depth(self, ev: FrameEvent) -> EstimateRecord:
        cfg = self.config
        f = self.filter
        wall = time.perf_counter()
        latency = {}
        self._ground = None
        self._fresh_features = False
        self._propagate(ev.timestamp)

        z, iterations = None, 0
        if cfg.use_visual and self.latest_imu is not None:
            z, iterations = self._visual(ev.payload, latency)
        elif cfg.use_visual:
            log.warning("depth frame at t=%.3f before any IMU sample; orientation unknown", ev.timestamp)

        tic = time.perf_counter()
        if z is not None:
            f.update(z)
        latency["fusion"] = _ms(tic)
        if z is not None:
            self.anchor = z
            self.anchor_filter_p = f.p.copy()
        elif self._fresh_features:
            # new reference corner: carry the chain forward by the filter's own displacement
            if self.anchor is None:
                self.anchor = f.p.copy()
            else:
                self.anchor = self.anchor + (f.p - self.anchor_filter_p)
            self.anchor_filter_p = f.p.copy()

        tic = time.perf_counter()
        pose = None
        if self.latest_joints is not None:
            pose = forward_kinematics(f.p, self.latest_joints, cfg.model)
        latency["kinematics"] = _ms(tic)

        tic = time.perf_counter()
        is_key = False
        if self._ground is not None and len(self._ground) and self.selector.offer(f.p):
            add_keyframe(self.map, f.p, self._ground)
            is_key = True
        latency["mapping"] = _ms(tic)
        latency["total"] = _ms(wall)

        self.frame_index += 1
        return EstimateRecord(float(ev.timestamp), f.p.copy(), pose, z is not None, iterations,
                              latency, is_key)


def _ms(tic):
    return (time.perf_counter() - tic) * 1e3


@dataclass(eq=False)
class RunResult:
    records: list
    map: Map2D
    metrics: dict


def run(dataset: Dataset, config: RunConfig | None = None) -> RunResult:
    """Replay ``dataset`` through a fresh estimator and score it against any ground truth."""
    config = (config or RunConfig()).validate()
    if dataset.is_empty:
        log.warning("dataset is empty; nothing to estimate")
        return RunResult([], Map2D(), {"n_frames": 0, "n_visual_updates": 0, "ate": None})
    est = Estimator(config, dataset.terrain, dataset.initial_position)
    records = []
    for ev in dataset.events():
        rec = est.process_event(ev)
        if rec is not None:
            records.append(rec)
    return RunResult(records, est.map, compute_metrics(records, dataset))


def _trajectory(records, attr):
    t = np.array([r.timestamp for r in records])
    if attr == "knee":
        xz = np.array([r.knee_position for r in records])
    else:
        xz = np.array([getattr(r.leg_pose, attr) if r.leg_pose is not None else (np.nan, np.nan)
                       for r in records])
    return Trajectory(t, xz)


def compute_metrics(records, dataset: Dataset) -> dict:
    metrics = {
        "terrain": dataset.terrain.value,
        "n_frames": len(records),
        "n_visual_updates": int(sum(r.visual_used for r in records)),
        "n_keyframes": int(sum(r.keyframe for r in records)),
        "ate": None,
    }
    truth = dataset.truth
    if truth is None or not records:
        return metrics
    window = dataset.visible_window if dataset.terrain is TerrainType.OBSTACLE else None
    metrics["ate_window"] = None if window is None else [float(window[0]), float(window[1])]
    ate = {}
    for name, ref in (("knee", truth.knee), ("toe", truth.toe)):
        report = compute_ate(_trajectory(records, name), Trajectory(truth.t, ref), window)
        ate[name] = report.as_dict()
    metrics["ate"] = ate
    return metrics


def latency_stats(records) -> dict:
    samples = {s: [r.latency[s] for r in records if s in r.latency] for s in (*STAGES, "total")}
    samples["visual"] = [sum(r.latency.get(s, 0.0) for s in ("preprocess", "features", "icp"))
                         for r in records if "preprocess" in r.latency]
    return timing_summary(samples)


def ate_report(metrics, part="toe") -> AteReport:
    d = metrics["ate"][part]
    return AteReport(d["rmse_x"], d["rmse_z"], d["n_samples"])


def write_trajectory(records, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRAJECTORY_HEADER)
        for r in records:
            w.writerow(r.row())


def write_outputs(result: RunResult, directory, with_latency=False) -> Path:
    """trajectory.csv, map.csv and metrics.json; latency is opt-in to keep outputs reproducible."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_trajectory(result.records, directory / "trajectory.csv")
    result.map.write_csv(directory / "map.csv")
    metrics = dict(result.metrics)
    if with_latency:
        metrics["latency_ms"] = latency_stats(result.records)
    with open(directory / "metrics.json", "w") as fh:
        json.dump(metrics, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return directory
