"""Dataset container, on-disk schema and the merged event stream.

A dataset directory holds::

    manifest.json   file names, terrain label, sensor rates, start position
    frames.jsonl    one {"t": ..., "points": [[x, y, z], ...]} object per depth frame
    imu.csv         t,ax,az,pitch
    encoders.csv    t,thigh_angle,theta1,theta2
    truth.csv       t,knee_x,knee_z,toe_x,toe_z            (optional)

Floats are written with ``repr`` so a write/read cycle is lossless.
"""
from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .eskf import ImuSample
from .errors import NonMonotonicTime, SchemaError
from .features import TerrainType
from .kinematics import JointReading
from .pointcloud import PointCloud3D, Rotation2D

MANIFEST = "manifest.json"
IMU_HEADER = ["t", "ax", "az", "pitch"]
ENCODER_HEADER = ["t", "thigh_angle", "theta1", "theta2"]
TRUTH_HEADER = ["t", "knee_x", "knee_z", "toe_x", "toe_z"]


class EventKind(enum.IntEnum):
    # value doubles as the processing order for equal timestamps
    IMU = 0
    ENCODERS = 1
    DEPTH = 2


@dataclass(frozen=True, eq=False)
class FrameEvent:
    timestamp: float
    kind: EventKind
    payload: object  # ImuSample | JointReading | PointCloud3D

    @classmethod
    def wrap(cls, payload):
        if isinstance(payload, ImuSample):
            return cls(payload.timestamp, EventKind.IMU, payload)
        if isinstance(payload, JointReading):
            return cls(payload.timestamp, EventKind.ENCODERS, payload)
        if isinstance(payload, PointCloud3D):
            return cls(payload.timestamp, EventKind.DEPTH, payload)
        raise TypeError(f"unsupported event payload {type(payload).__name__}")


def merge_events(events):
    """Sort events by (timestamp, kind); the result is independent of arrival order."""
    return sorted(events, key=lambda ev: (ev.timestamp, int(ev.kind)))


@dataclass(eq=False)
class GroundTruth:
    t: np.ndarray
    knee: np.ndarray
    toe: np.ndarray


@dataclass(eq=False)
class Dataset:
    frames: list = field(default_factory=list)
    imu: list = field(default_factory=list)
    encoders: list = field(default_factory=list)
    terrain: TerrainType = TerrainType.STAIR
    camera_fps: float = 30.0
    imu_rate: float = 100.0
    initial_position: tuple = (0.0, 0.0)
    truth: GroundTruth | None = None
    visible_window: tuple | None = None

    def events(self):
        evs = [FrameEvent.wrap(p) for p in (*self.imu, *self.encoders, *self.frames)]
        return merge_events(evs)

    @property
    def is_empty(self):
        return not (self.frames or self.imu or self.encoders)


def _fmt(v):
    return repr(float(v))


def write_dataset(ds: Dataset, directory) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "frames.jsonl", "w") as fh:
        for frame in ds.frames:
            fh.write(json.dumps({"t": float(frame.timestamp), "points": frame.points.tolist()}) + "\n")
    with open(directory / "imu.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(IMU_HEADER)
        for s in ds.imu:
            w.writerow([_fmt(s.timestamp), _fmt(s.accel_body[0]), _fmt(s.accel_body[1]), _fmt(s.rot.angle)])
    with open(directory / "encoders.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(ENCODER_HEADER)
        for j in ds.encoders:
            w.writerow([_fmt(j.timestamp), _fmt(j.thigh_angle), _fmt(j.theta1), _fmt(j.theta2)])
    manifest = {
        "frames": "frames.jsonl",
        "imu": "imu.csv",
        "encoders": "encoders.csv",
        "truth": None,
        "terrain": ds.terrain.value,
        "camera_fps": ds.camera_fps,
        "imu_rate": ds.imu_rate,
        "initial_position": [float(v) for v in ds.initial_position],
        "visible_window": None if ds.visible_window is None else [float(v) for v in ds.visible_window],
    }
    if ds.truth is not None:
        manifest["truth"] = "truth.csv"
        write_truth(ds.truth, directory / "truth.csv")
    with open(directory / MANIFEST, "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return directory


def write_truth(truth: GroundTruth, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRUTH_HEADER)
        for t, k, p in zip(truth.t, truth.knee, truth.toe):
            w.writerow([_fmt(t), _fmt(k[0]), _fmt(k[1]), _fmt(p[0]), _fmt(p[1])])


def _check_increasing(times, path):
    for i in range(1, len(times)):
        if not times[i] > times[i - 1]:
            kind = "duplicate" if times[i] == times[i - 1] else "out-of-order"
            # +2: header line plus 1-based numbering
            raise NonMonotonicTime(f"{path}:{i + 2}: {kind} timestamp {times[i]!r}")


def read_csv(path, header):
    """Rows of floats from a CSV with an exact header; SchemaError names file and line."""
    path = Path(path)
    if not path.is_file():
        raise SchemaError("file not found", path)
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None or [c.strip() for c in first] != header:
            raise SchemaError(f"expected header {','.join(header)}", path, 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise SchemaError(f"expected {len(header)} columns, got {len(row)}", path, lineno)
            try:
                vals = [float(v) for v in row]
            except ValueError as exc:
                raise SchemaError(str(exc), path, lineno) from None
            if not all(math.isfinite(v) for v in vals):
                raise SchemaError("non-finite value", path, lineno)
            rows.append(vals)
    return np.array(rows, dtype=float).reshape(-1, len(header))


def read_frames(path):
    path = Path(path)
    if not path.is_file():
        raise SchemaError("file not found", path)
    frames = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                frames.append(PointCloud3D(np.asarray(obj["points"], dtype=float).reshape(-1, 3),
                                           float(obj["t"])))
            except (ValueError, KeyError, TypeError) as exc:
                raise SchemaError(f"bad frame record: {exc}", path, lineno) from None
    times = [f.timestamp for f in frames]
    for i in range(1, len(times)):
        if not times[i] > times[i - 1]:
            raise NonMonotonicTime(f"{path}:{i + 1}: frame timestamp {times[i]!r} does not increase")
    return frames


def read_truth(path) -> GroundTruth:
    rows = read_csv(path, TRUTH_HEADER)
    _check_increasing(rows[:, 0], path)
    return GroundTruth(rows[:, 0], rows[:, 1:3], rows[:, 3:5])


def load_dataset(manifest) -> Dataset:
    """Load a dataset from its directory or manifest path."""
    manifest = Path(manifest)
    if manifest.is_dir():
        manifest = manifest / MANIFEST
    if not manifest.is_file():
        raise SchemaError("manifest not found", manifest)
    try:
        meta = json.loads(manifest.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(str(exc), manifest, exc.lineno) from None
    root = manifest.parent

    def required(key):
        if not meta.get(key):
            raise SchemaError(f"missing '{key}' entry", manifest)
        return root / meta[key]

    camera_fps = float(meta.get("camera_fps", 30.0))
    imu_rate = float(meta.get("imu_rate", 100.0))
    if not (camera_fps > 0 and imu_rate > 0):
        raise SchemaError("sensor rates must be positive", manifest)
    try:
        terrain = TerrainType.parse(meta.get("terrain", "stair"))
    except ValueError:
        raise SchemaError(f"unknown terrain {meta.get('terrain')!r}", manifest) from None

    imu_path = required("imu")
    imu_rows = read_csv(imu_path, IMU_HEADER)
    _check_increasing(imu_rows[:, 0], imu_path)
    imu = [ImuSample(r[0], r[1:3], Rotation2D(r[3])) for r in imu_rows]

    enc_path = required("encoders")
    enc_rows = read_csv(enc_path, ENCODER_HEADER)
    _check_increasing(enc_rows[:, 0], enc_path)
    try:
        encoders = [JointReading(*r) for r in enc_rows]
    except ValueError as exc:
        raise SchemaError(str(exc), enc_path) from None

    frames = read_frames(required("frames"))
    truth = read_truth(root / meta["truth"]) if meta.get("truth") else None
    window = meta.get("visible_window")
    return Dataset(frames, imu, encoders, terrain, camera_fps, imu_rate,
                   tuple(meta.get("initial_position") or (0.0, 0.0)), truth,
                   None if window is None else (float(window[0]), float(window[1])))
