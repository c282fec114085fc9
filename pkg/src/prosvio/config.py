"""Run configuration: every tunable of the estimator in one JSON-serialisable tree."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .eskf import InitialCovariance, NoiseParams
from .features import (DEFAULT_BOX_HEIGHT, DEFAULT_BOX_WIDTH, DEFAULT_GATE, DEFAULT_INLIER_TOL,
                       DEFAULT_ITERATIONS, DEFAULT_MAX_GAP, DEFAULT_MIN_INLIERS)
from .icp import DEFAULT_MAX_ITER, DEFAULT_TOLERANCE
from .kinematics import ProsthesisModel
from .mapper import KEYFRAME_MAX, KEYFRAME_MIN
from .pointcloud import PreprocessConfig


@dataclass
class FeatureConfig:
    d: float = DEFAULT_BOX_HEIGHT
    w: float = DEFAULT_BOX_WIDTH
    inlier_tol: float = DEFAULT_INLIER_TOL
    iterations: int = DEFAULT_ITERATIONS
    min_inliers: int = DEFAULT_MIN_INLIERS
    max_gap: float = DEFAULT_MAX_GAP
    gate: float = DEFAULT_GATE

    def validate(self):
        if min(self.d, self.w, self.inlier_tol, self.max_gap, self.gate) <= 0:
            raise ValueError("feature box, tolerances and gate must be positive")
        if self.iterations < 1 or self.min_inliers < 1:
            raise ValueError("RANSAC iterations and min_inliers must be >= 1")


@dataclass
class IcpConfig:
    t_th: float = DEFAULT_TOLERANCE
    max_iter: int = DEFAULT_MAX_ITER
    # reject registrations further than this from the inertial prediction (m); None disables
    max_innovation: float | None = 0.01

    def validate(self):
        if self.t_th <= 0 or self.max_iter < 1:
            raise ValueError("ICP tolerance must be positive and max_iter >= 1")
        if self.max_innovation is not None and self.max_innovation <= 0:
            raise ValueError("max_innovation must be positive or None")


@dataclass
class KeyframeConfig:
    lo: float = KEYFRAME_MIN
    hi: float = KEYFRAME_MAX
    map_knn: int = 8

    def validate(self):
        if not 0 <= self.lo <= self.hi:
            raise ValueError("keyframe bounds must satisfy 0 <= lo <= hi")


@dataclass
class RunConfig:
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    icp: IcpConfig = field(default_factory=IcpConfig)
    noise: NoiseParams = field(default_factory=NoiseParams)
    initial_cov: InitialCovariance = field(default_factory=InitialCovariance)
    model: ProsthesisModel = field(default_factory=ProsthesisModel)
    keyframes: KeyframeConfig = field(default_factory=KeyframeConfig)
    seed: int = 0
    use_visual: bool = True
    imu_interpolation: str = "linear"  # or "hold"

    def validate(self):
        for part in (self.preprocess, self.features, self.icp, self.keyframes):
            part.validate()
        if self.imu_interpolation not in ("linear", "hold"):
            raise ValueError("imu_interpolation must be 'linear' or 'hold'")
        return self

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data):
        return _build(cls, data or {}).validate()

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def _build(cls, data):
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(fields)
    if unknown:
        raise ValueError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    kwargs = {}
    defaults = cls()
    for name, value in data.items():
        current = getattr(defaults, name)
        if dataclasses.is_dataclass(current):
            kwargs[name] = _build(type(current), value)
        elif isinstance(current, tuple):
            kwargs[name] = tuple(value)
        else:
            kwargs[name] = value
    return cls(**kwargs)
