"""Planar link model of the prosthesis and its forward kinematics.

Angle conventions (sagittal view, x forward, z up):

* shank angle ``alpha = thigh_angle - theta1`` is measured from straight
  down, positive when the ankle is ahead of the knee;
* the foot is a rigid bent link through the ankle; its toe direction makes
  the angle ``beta = alpha - theta2 + foot_bend`` with straight down, and the
  heel lies on the opposite side of the ankle. With ``foot_bend = pi/2`` the
  sole is horizontal when all joint angles are zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .pointcloud import Point2D, Rotation2D


@dataclass(frozen=True)
class ProsthesisModel:
    shank_length: float = 0.45
    ankle_to_toe: float = 0.15
    ankle_to_heel: float = 0.07
    foot_bend: float = math.pi / 2
    base_offset: tuple = (0.0, 0.0)  # knee axis relative to the camera, shank frame

    def __post_init__(self):
        for name in ("shank_length", "ankle_to_toe", "ankle_to_heel"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class JointReading:
    timestamp: float
    thigh_angle: float
    theta1: float
    theta2: float

    def __post_init__(self):
        for name in ("thigh_angle", "theta1", "theta2"):
            a = getattr(self, name)
            if not (math.isfinite(a) and -math.pi <= a <= math.pi):
                raise ValueError(f"{name}={a!r} outside [-pi, pi]")

    @property
    def shank_angle(self):
        return self.thigh_angle - self.theta1


@dataclass(frozen=True)
class LegPose:
    knee: Point2D
    ankle: Point2D
    heel: Point2D
    toe: Point2D
    timestamp: float = 0.0


def _down(angle):
    """Unit vector at ``angle`` from straight down, rotating towards +x."""
    return np.array([math.sin(angle), -math.cos(angle)])


def forward_kinematics(base, joints: JointReading, model: ProsthesisModel = ProsthesisModel()) -> LegPose:
    base = np.asarray(base, dtype=float).reshape(2)
    if not np.all(np.isfinite(base)):
        raise ValueError("base position must be finite")
    alpha = joints.shank_angle
    knee = base + Rotation2D(alpha).apply(np.asarray(model.base_offset, dtype=float))
    ankle = knee + model.shank_length * _down(alpha)
    foot = _down(alpha - joints.theta2 + model.foot_bend)
    toe = ankle + model.ankle_to_toe * foot
    heel = ankle - model.ankle_to_heel * foot
    return LegPose(Point2D(*knee), Point2D(*ankle), Point2D(*heel), Point2D(*toe), joints.timestamp)
