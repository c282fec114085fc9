"""Sagittal-plane error-state Kalman filter.

State layout (8 values, all 2-vectors in the ground frame, x forward, z up)::

    [0:2] p    position (m)
    [2:4] v    velocity (m/s)
    [4:6] a_b  accelerometer bias (m/s^2, body frame)
    [6:8] g    gravity (m/s^2)

The nominal state is integrated from the accelerometer; the error state is
driven by a linear model whose mean stays zero between measurements, so the
prediction only changes the covariance. A position measurement fills the
error state, which is then added onto the nominal state and reset.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ExcessiveDt, NonConvergedIcp, NonMonotonicTime, SingularInnovation
from .icp import IcpResult
from .pointcloud import Rotation2D

GRAVITY = np.array([0.0, -9.81])
STATE_DIM = 8
MAX_DT = 0.1
MAX_CONDITION = 1e12
STALE_AFTER = 1.0

I2 = np.eye(2)
H = np.hstack([I2, np.zeros((2, 6))])


@dataclass(frozen=True, eq=False)
class ImuSample:
    timestamp: float
    accel_body: np.ndarray
    rot: Rotation2D = Rotation2D(0.0)

    def __post_init__(self):
        acc = np.asarray(self.accel_body, dtype=float).reshape(2)
        if not np.all(np.isfinite(acc)):
            raise ValueError("acceleration must be finite")
        object.__setattr__(self, "accel_body", acc)


@dataclass(frozen=True)
class NoiseParams:
    sigma_a: float = 0.05  # m/s^2, white noise per sample
    sigma_ab: float = 0.005  # m/s^2/sqrt(s), bias random-walk density
    meas_std: float = 0.01  # m, visual position measurement std

    def __post_init__(self):
        for name in ("sigma_a", "sigma_ab", "meas_std"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")


@dataclass(frozen=True)
class InitialCovariance:
    p: float = 1e-4
    v: float = 1e-2
    a_b: float = 1e-2
    g: float = 1e-4

    def matrix(self):
        return np.diag(np.repeat([self.p, self.v, self.a_b, self.g], 2))


@dataclass(eq=False)
class NominalState:
    p: np.ndarray = field(default_factory=lambda: np.zeros(2))
    v: np.ndarray = field(default_factory=lambda: np.zeros(2))
    a_b: np.ndarray = field(default_factory=lambda: np.zeros(2))
    g: np.ndarray = field(default_factory=lambda: GRAVITY.copy())

    def as_vector(self):
        return np.concatenate([self.p, self.v, self.a_b, self.g])

    @classmethod
    def from_vector(cls, x):
        x = np.asarray(x, dtype=float)
        return cls(x[0:2].copy(), x[2:4].copy(), x[4:6].copy(), x[6:8].copy())

    def copy(self):
        return NominalState.from_vector(self.as_vector())


@dataclass(eq=False)
class ErrorState:
    delta: np.ndarray = field(default_factory=lambda: np.zeros(STATE_DIM))

    def reset(self):
        self.delta = np.zeros(STATE_DIM)


def transition_matrices(dt, rot: Rotation2D):
    """Error-state transition F_x (8x8) and perturbation mapping F_i (8x4)."""
    F_x = np.eye(STATE_DIM)
    F_x[0:2, 2:4] = I2 * dt
    F_x[2:4, 4:6] = -rot.matrix * dt
    F_x[2:4, 6:8] = I2 * dt
    F_i = np.zeros((STATE_DIM, 4))
    F_i[2:4, 0:2] = I2
    F_i[4:6, 2:4] = I2
    return F_x, F_i


def process_noise(dt, noise: NoiseParams):
    return np.diag([noise.sigma_a**2 * dt**2] * 2 + [noise.sigma_ab**2 * dt] * 2)


def symmetrize(P):
    return 0.5 * (P + P.T)


class Filter:
    """Single-owner filter; feed ``predict``/``update`` in timestamp order."""

    def __init__(self, t0=0.0, noise: NoiseParams | None = None,
                 nominal: NominalState | None = None,
                 initial_cov: InitialCovariance | None = None,
                 max_dt=MAX_DT, stale_after=STALE_AFTER):
        self.noise = noise or NoiseParams()
        self.nominal = nominal.copy() if nominal is not None else NominalState()
        self.error = ErrorState()
        self.P = (initial_cov or InitialCovariance()).matrix()
        self.last_timestamp = float(t0)
        self.last_update_timestamp = float(t0)
        self.max_dt = max_dt
        self.stale_after = stale_after

    @property
    def p(self):
        return self.nominal.p

    @property
    def stale(self):
        """True once inertial-only propagation has run longer than ``stale_after``."""
        return self.last_timestamp - self.last_update_timestamp > self.stale_after

    def world_accel(self, sample: ImuSample):
        n = self.nominal
        return sample.rot.apply(sample.accel_body - n.a_b) + n.g

    def predict(self, sample: ImuSample):
        dt = sample.timestamp - self.last_timestamp
        if not dt > 0:
            raise NonMonotonicTime(
                f"IMU sample at {sample.timestamp} does not follow {self.last_timestamp}")
        if dt > self.max_dt:
            raise ExcessiveDt(f"dt = {dt:.4f} s exceeds {self.max_dt} s")

        n = self.nominal
        acc = self.world_accel(sample)
        n.p = n.p + n.v * dt + 0.5 * acc * dt**2
        n.v = n.v + acc * dt

        F_x, F_i = transition_matrices(dt, sample.rot)
        Q = process_noise(dt, self.noise)
        self.error.delta = F_x @ self.error.delta
        self.P = symmetrize(F_x @ self.P @ F_x.T + F_i @ Q @ F_i.T)
        self.last_timestamp = float(sample.timestamp)
        return self

    def update(self, z):
        """Correct with an absolute position measurement, inject and reset."""
        z = np.asarray(z, dtype=float).reshape(2)
        if not np.all(np.isfinite(z)):
            raise ValueError("measurement must be finite")
        V = np.eye(2) * self.noise.meas_std**2
        S = H @ self.P @ H.T + V
        if np.linalg.cond(S) > MAX_CONDITION:
            raise SingularInnovation("innovation covariance is numerically singular")
        K = np.linalg.solve(S, H @ self.P).T
        self.error.delta = K @ (z - self.nominal.p)
        self.P = symmetrize((np.eye(STATE_DIM) - K @ H) @ self.P)
        self._inject()
        self.last_update_timestamp = self.last_timestamp
        return self

    def _inject(self):
        x = self.nominal.as_vector() + self.error.delta
        self.nominal = NominalState.from_vector(x)
        self.error.reset()


def measurement_from_icp(prev_keyed_position, icp: IcpResult):
    """Absolute position obtained by chaining an ICP displacement onto an anchor."""
    if not icp.converged:
        raise NonConvergedIcp(f"ICP did not converge after {icp.iterations} iterations")
    return np.asarray(prev_keyed_position, dtype=float).reshape(2) + icp.t.vector
