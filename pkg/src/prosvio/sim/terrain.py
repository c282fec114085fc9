"""Sagittal terrain profiles: stairs, a box obstacle on flat ground, or flat ground."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..features import TerrainType


@dataclass(frozen=True)
class TerrainSpec:
    kind: TerrainType = TerrainType.STAIR
    riser: float = 0.147
    tread: float = 0.28
    n_steps: int = 3  # horizontal levels including the floor
    obstacle_height: float = 0.14
    obstacle_width: float = 0.13
    lead_in: float = 1.5  # floor in front of the first riser / obstacle
    run_out: float = 1.5  # top landing or floor behind the obstacle

    def __post_init__(self):
        object.__setattr__(self, "kind", TerrainType.parse(self.kind))
        if self.lead_in <= 0 or self.run_out <= 0:
            raise ValueError("lead_in and run_out must be positive")
        if self.kind is TerrainType.STAIR:
            if self.riser <= 0 or self.tread <= 0 or self.n_steps < 1:
                raise ValueError("stairs need positive riser/tread and n_steps >= 1")
        elif self.kind is TerrainType.OBSTACLE:
            if self.obstacle_height <= 0 or self.obstacle_width <= 0:
                raise ValueError("obstacle needs positive height and width")


@dataclass(frozen=True, eq=False)
class Terrain:
    """Axis-aligned polyline; ``vertices`` is (M, 2), ordered by increasing x."""

    kind: TerrainType
    vertices: np.ndarray

    @property
    def segments(self):
        return self.vertices[:-1], self.vertices[1:]

    def edges(self):
        """Convex top corners (step noses, obstacle top corners)."""
        v = self.vertices
        out = []
        for i in range(1, len(v) - 1):
            before, after = v[i] - v[i - 1], v[i + 1] - v[i]
            rises_then_flat = before[0] == 0 and before[1] > 0 and after[1] == 0
            flat_then_drops = before[1] == 0 and after[0] == 0 and after[1] < 0
            if rises_then_flat or flat_then_drops:
                out.append(v[i].copy())
        return np.array(out).reshape(-1, 2)

    def height_at(self, x):
        """Highest terrain z at each x (vertical faces report their top)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        v = self.vertices
        h = np.full(x.shape, -np.inf)
        for a, b in zip(v[:-1], v[1:]):
            lo, hi = min(a[0], b[0]), max(a[0], b[0])
            on = (x >= lo) & (x <= hi)
            h[on] = np.maximum(h[on], max(a[1], b[1]) if a[0] == b[0] else a[1])
        return h

    def distance_to(self, points):
        """Euclidean distance from each point to the polyline."""
        p = np.asarray(points, dtype=float).reshape(-1, 2)
        a, b = self.segments
        e = b - a
        rel = p[:, None, :] - a[None, :, :]
        u = np.clip((rel * e).sum(-1) / (e * e).sum(-1), 0.0, 1.0)
        closest = a[None] + u[..., None] * e[None]
        return np.sqrt(((p[:, None, :] - closest) ** 2).sum(-1)).min(axis=1)


def gen_terrain(spec: TerrainSpec) -> Terrain:
    if spec.kind is TerrainType.STAIR:
        r, t = spec.riser, spec.tread
        verts = [(-spec.lead_in, 0.0), (0.0, 0.0)]
        for k in range(1, spec.n_steps):
            x0 = (k - 1) * t
            verts.append((x0, k * r))
            verts.append((x0 + (t if k < spec.n_steps - 1 else spec.run_out), k * r))
        if spec.n_steps == 1:
            verts[-1] = (spec.run_out, 0.0)
    elif spec.kind is TerrainType.OBSTACLE:
        h, w = spec.obstacle_height, spec.obstacle_width
        verts = [(-spec.lead_in, 0.0), (0.0, 0.0), (0.0, h), (w, h), (w, 0.0), (w + spec.run_out, 0.0)]
    else:
        verts = [(-spec.lead_in, 0.0), (spec.run_out, 0.0)]
    return Terrain(spec.kind, np.array(verts, dtype=float))
