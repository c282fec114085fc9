"""Translation-only 2D ICP between consecutive feature sets."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyCloud
from .pointcloud import PointCloud2D

DEFAULT_TOLERANCE = 1e-6
DEFAULT_MAX_ITER = 20
MAX_DISPLACEMENT = 0.5  # m, sanity cap for one camera period of leg motion


@dataclass(frozen=True)
class Displacement2D:
    dx: float = 0.0
    dz: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.dx) and math.isfinite(self.dz)):
            raise ValueError("displacement must be finite")

    @classmethod
    def from_vector(cls, v):
        return cls(float(v[0]), float(v[1]))

    @property
    def vector(self):
        return np.array([self.dx, self.dz])

    @property
    def magnitude(self):
        return math.hypot(self.dx, self.dz)


@dataclass(frozen=True)
class IcpResult:
    t: Displacement2D
    converged: bool
    iterations: int
    final_rmse: float
    rmse_history: tuple = field(default=(), repr=False)


def _match(source, target, t):
    """Index of the nearest translated source point for every target point.

    Exact linear scan; ``argmin`` returns the lowest index on ties.
    """
    moved = source + t
    d2 = ((target[:, None, :] - moved[None, :, :]) ** 2).sum(axis=2)
    idx = np.argmin(d2, axis=1)
    return idx, d2[np.arange(len(target)), idx]


def icp_translation(
    source: PointCloud2D,
    target: PointCloud2D,
    t0: Displacement2D | None = None,
    t_th: float = DEFAULT_TOLERANCE,
    max_iter: int = DEFAULT_MAX_ITER,
) -> IcpResult:
    """Estimate T such that ``target ≈ source + T``.

    Every iteration matches each target point to its nearest translated source
    point, then adds the mean residual of those pairs (the exact least-squares
    translation for fixed matches) to T. Stops when the increment is no larger
    than ``t_th`` or after ``max_iter`` iterations.

    ``rmse_history[k]`` is the matching RMSE at the start of iteration k+1;
    the last entry is the RMSE at the returned T.
    """
    src = source.points
    tgt = target.points
    if len(src) == 0 or len(tgt) == 0:
        raise EmptyCloud("ICP needs non-empty source and target clouds")
    if t_th <= 0 or max_iter < 1:
        raise ValueError("t_th must be positive and max_iter >= 1")

    t = np.zeros(2) if t0 is None else t0.vector.copy()
    history = []
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        idx, d2 = _match(src, tgt, t)
        history.append(math.sqrt(d2.mean()))
        delta = (tgt - (src[idx] + t)).mean(axis=0)
        t = t + delta
        if np.linalg.norm(delta) <= t_th:
            converged = True
            break

    _, d2 = _match(src, tgt, t)
    final_rmse = math.sqrt(d2.mean())
    history.append(final_rmse)
    result = Displacement2D.from_vector(t)
    if result.magnitude >= MAX_DISPLACEMENT:
        converged = False
    return IcpResult(result, converged, iterations, final_rmse, tuple(history))
