"""Ground-truth gait for the instrumented leg.

The leg is driven by three smooth signals: the ankle position, the shank
angle and the knee flexion. Each is a sum of cycloidal ramps
``s(u) = u - sin(2 pi u) / (2 pi)``, which have zero velocity and zero
acceleration at both ends, so every signal is C2 and its derivatives are
available in closed form. The knee (where camera and IMU sit) follows from
the ankle and the shank angle. The foot stays level.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..features import TerrainType
from ..kinematics import JointReading, ProsthesisModel, forward_kinematics
from .terrain import Terrain

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class GaitSpec:
    stride_duration: float = 1.2
    step_clearance: float = 0.03
    camera_fps: float = 30.0
    imu_rate: float = 100.0
    depth_noise_std: float = 0.005
    rng_seed: int = 0
    n_strides: int | None = None  # None: climb every step / cross and walk on
    stride_length: float = 0.30  # flat-ground strides
    stand_time: float = 1.0
    end_stand_time: float = 0.5
    swing_fraction: float = 0.4
    swing_x_delay: float = 0.25  # share of the swing spent lifting before moving forward
    shank_fore: float = 0.35  # rad per metre of ankle advance, shank angle at heel strike
    shank_aft: float = 0.7  # rad per metre of advance, shank angle at push-off (negated)
    knee_flexion: float = 0.8  # rad, peak swing flexion
    camera_mount_pitch: float = -0.6  # rad, camera axis relative to a vertical shank
    fov: float = 1.08  # rad, sagittal field of view
    rays: int = 1000
    max_range: float = 4.0
    min_range: float = 0.1
    lateral_spread: float = 0.04
    truth_rate: float = 120.0
    toe_margin: float = 0.03  # toe to riser / heel to obstacle at footholds
    heel_margin: float = 0.03

    def __post_init__(self):
        if not (self.camera_fps > 0 and self.imu_rate > 0 and self.truth_rate > 0):
            raise ValueError("sensor rates must be positive")
        if self.stride_duration <= 0 or not 0 < self.swing_fraction < 1:
            raise ValueError("invalid stride timing")
        if not 0 <= self.swing_x_delay < 1:
            raise ValueError("swing_x_delay must lie in [0, 1)")
        if not 0 < self.fov < math.pi or self.rays < 2:
            raise ValueError("fov must lie in (0, pi) and rays >= 2")


def cycloid(u):
    """Cycloidal ramp and its first two derivatives with respect to u."""
    u = np.clip(u, 0.0, 1.0)
    w = TWO_PI * u
    return u - np.sin(w) / TWO_PI, 1.0 - np.cos(w), TWO_PI * np.sin(w)


def _ramp(t, t0, duration, amount):
    """Value, rate and acceleration of a ramp adding ``amount`` over [t0, t0+duration]."""
    u = (t - t0) / duration
    s, ds, dds = cycloid(u)
    inside = (u > 0) & (u < 1)
    return amount * s, np.where(inside, amount * ds / duration, 0.0), \
        np.where(inside, amount * dds / duration**2, 0.0)


class _Signal:
    """Sum of cycloidal ramps on top of a constant."""

    def __init__(self, start):
        self.start = float(start)
        self.ramps = []

    def add(self, t0, duration, amount):
        if amount != 0.0 and duration > 0:
            self.ramps.append((t0, duration, amount))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        val = np.full(t.shape, self.start)
        vel = np.zeros(t.shape)
        acc = np.zeros(t.shape)
        for t0, dur, amount in self.ramps:
            a, b, c = _ramp(t, t0, dur, amount)
            val += a
            vel += b
            acc += c
        return val, vel, acc


def footholds(terrain: Terrain, gait: GaitSpec, model: ProsthesisModel):
    """Ankle positions (x, z) at every stance, starting with the initial stance."""
    heel, toe = model.ankle_to_heel, model.ankle_to_toe
    if terrain.kind is TerrainType.STAIR:
        edges = terrain.edges()
        tread = edges[1, 0] - edges[0, 0] if len(edges) > 1 else gait.stride_length
        on_step = gait.heel_margin + heel
        pts = [(on_step - tread, 0.0)] + [(e[0] + on_step, e[1]) for e in edges]
        n = len(pts) - 1 if gait.n_strides is None else min(gait.n_strides, len(pts) - 1)
        return np.array(pts[: n + 1])
    if terrain.kind is TerrainType.OBSTACLE:
        near, far = terrain.edges()[:, 0]
        before = near - gait.toe_margin - toe
        after = far + gait.heel_margin + heel
        n_total = 5 if gait.n_strides is None else max(gait.n_strides, 1)
        n_before = min(2, n_total - 1)
        xs = [before - gait.stride_length * k for k in range(n_before, 0, -1)] + [before, after]
        xs += [after + gait.stride_length * k for k in range(1, n_total - n_before)]
        return np.column_stack([xs, np.zeros(len(xs))])
    n = 4 if gait.n_strides is None else gait.n_strides
    return np.column_stack([gait.stride_length * np.arange(n + 1), np.zeros(n + 1)])


def _swing_clearance(terrain, gait, model, a, b, lift, n=400):
    """Smallest (foot height - edge height - clearance) while the foot spans an edge."""
    edges = terrain.edges()
    if len(edges) == 0 or b[0] == a[0]:
        return np.inf
    tau = np.linspace(0.0, 1.0, n)
    peak = max(a[1], b[1]) + lift
    up = cycloid(tau / 0.5)[0]
    down = cycloid((tau - 0.5) / 0.5)[0]
    z = a[1] + (peak - a[1]) * up + (b[1] - peak) * down
    x = a[0] + (b[0] - a[0]) * cycloid((tau - gait.swing_x_delay) / (1 - gait.swing_x_delay))[0]
    margin = np.inf
    for ex, ez in edges:
        over = (x - model.ankle_to_heel <= ex) & (x + model.ankle_to_toe >= ex)
        if over.any():
            margin = min(margin, float((z[over] - ez).min()) - gait.step_clearance)
    return margin


def swing_lift(terrain, gait, model, a, b):
    """Lift above the higher foothold needed to clear every edge (bisection)."""
    if b[0] == a[0] and b[1] == a[1]:
        return 0.0
    lo = gait.step_clearance
    if _swing_clearance(terrain, gait, model, a, b, lo) >= 0:
        return lo
    hi = 2 * lo + 0.05
    while _swing_clearance(terrain, gait, model, a, b, hi) < 0:
        hi *= 2
        if hi > 2.0:
            raise ValueError("cannot find a swing that clears the terrain")
    for _ in range(50):
        mid = 0.5 * (lo + hi)
        if _swing_clearance(terrain, gait, model, a, b, mid) >= 0:
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(eq=False)
class GaitTruth:
    """Closed-form ground truth; evaluate any signal at arbitrary times."""

    terrain: Terrain
    spec: GaitSpec
    model: ProsthesisModel
    ankle_x: _Signal
    ankle_z: _Signal
    alpha: _Signal
    flexion: _Signal
    duration: float
    holds: np.ndarray = field(repr=False)
    swing_windows: list = field(default_factory=list, repr=False)

    def knee(self, t):
        """Knee position, velocity and acceleration, each (N, 2)."""
        ax, vx, acx = self.ankle_x(t)
        az, vz, acz = self.ankle_z(t)
        al, dal, ddal = self.alpha(t)
        L = self.model.shank_length
        s, c = np.sin(al), np.cos(al)
        pos = np.column_stack([ax - L * s, az + L * c])
        vel = np.column_stack([vx - L * c * dal, vz - L * s * dal])
        acc = np.column_stack([acx - L * (c * ddal - s * dal**2),
                               acz - L * (s * ddal + c * dal**2)])
        return pos, vel, acc

    def camera_pitch(self, t):
        return self.spec.camera_mount_pitch + self.alpha(t)[0]

    def joints(self, t):
        """(thigh_angle, theta1, theta2) arrays."""
        al = self.alpha(t)[0]
        flex = self.flexion(t)[0]
        theta2 = al + self.model.foot_bend - math.pi / 2
        return al + flex, flex, theta2

    def joint_readings(self, times):
        thigh, th1, th2 = self.joints(times)
        return [JointReading(float(t), float(a), float(b), float(c))
                for t, a, b, c in zip(times, thigh, th1, th2)]

    def leg(self, t):
        """Knee, ankle, heel, toe positions via forward kinematics, each (N, 2)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        knee = self.knee(t)[0]
        out = {k: np.zeros((len(t), 2)) for k in ("knee", "ankle", "heel", "toe")}
        for i, jr in enumerate(self.joint_readings(t)):
            pose = forward_kinematics(knee[i], jr, self.model)
            for k in out:
                out[k][i] = getattr(pose, k)
        return out


def gen_gait(terrain: Terrain, gait: GaitSpec = GaitSpec(), model: ProsthesisModel = ProsthesisModel()) -> GaitTruth:
    holds = footholds(terrain, gait, model)
    T, t_sw = gait.stride_duration, gait.stride_duration * gait.swing_fraction
    t_st = T - t_sw
    ankle_x, ankle_z = _Signal(holds[0, 0]), _Signal(holds[0, 1])
    alpha, flexion = _Signal(0.0), _Signal(0.0)
    current_alpha = 0.0
    windows = []
    n = len(holds) - 1
    for k in range(n):
        a, b = holds[k], holds[k + 1]
        t0 = gait.stand_time + k * T
        advance = float(np.hypot(*(b - a)))
        lift = swing_lift(terrain, gait, model, a, b) if advance > 0 else 0.0
        peak = max(a[1], b[1]) + lift
        x_start = t0 + gait.swing_x_delay * t_sw
        ankle_x.add(x_start, t_sw - (x_start - t0), b[0] - a[0])
        ankle_z.add(t0, t_sw / 2, peak - a[1])
        ankle_z.add(t0 + t_sw / 2, t_sw / 2, b[1] - peak)
        fore = gait.shank_fore * advance
        aft = 0.0 if k == n - 1 else -gait.shank_aft * advance
        alpha.add(t0, t_sw, fore - current_alpha)
        alpha.add(t0 + t_sw, t_st, aft - fore)
        current_alpha = aft
        if advance > 0:
            flexion.add(t0, t_sw / 2, gait.knee_flexion)
            flexion.add(t0 + t_sw / 2, t_sw / 2, -gait.knee_flexion)
        windows.append((t0, t0 + t_sw))
    duration = gait.stand_time + n * T + gait.end_stand_time
    return GaitTruth(terrain, gait, model, ankle_x, ankle_z, alpha, flexion, duration, holds, windows)
