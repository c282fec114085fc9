"""Trajectory accuracy metrics: per-axis absolute trajectory error and trial summaries."""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import NoOverlap, SchemaError


@dataclass(eq=False)
class Trajectory:
    t: np.ndarray
    xz: np.ndarray

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float).reshape(-1)
        self.xz = np.asarray(self.xz, dtype=float).reshape(-1, 2)
        if len(self.t) != len(self.xz):
            raise ValueError("timestamps and positions differ in length")
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("trajectory timestamps must be strictly increasing")

    def __len__(self):
        return len(self.t)

    @classmethod
    def from_csv(cls, path, x_col="knee_x", z_col="knee_z", t_col="t"):
        path = Path(path)
        if not path.is_file():
            raise SchemaError("file not found", path)
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            missing = {t_col, x_col, z_col} - set(reader.fieldnames or ())
            if missing:
                raise SchemaError(f"missing columns {sorted(missing)}", path, 1)
            rows = []
            for lineno, row in enumerate(reader, start=2):
                try:
                    rows.append((float(row[t_col]), float(row[x_col]), float(row[z_col])))
                except (TypeError, ValueError) as exc:
                    raise SchemaError(str(exc), path, lineno) from None
        arr = np.array(rows, dtype=float).reshape(-1, 3)
        return cls(arr[:, 0], arr[:, 1:])


@dataclass(frozen=True)
class AteReport:
    rmse_x: float
    rmse_z: float
    n_samples: int

    def as_dict(self):
        return asdict(self)


def compute_ate(est: Trajectory, truth: Trajectory, window=None) -> AteReport:
    """Per-axis RMSE of ``est`` against ``truth`` interpolated at the estimate times.

    No alignment is applied; both trajectories are expected to share an origin.
    ``window`` optionally restricts the estimate samples to ``[t0, t1]``.
    """
    if len(est) == 0 or len(truth) == 0:
        raise NoOverlap("empty trajectory")
    lo, hi = truth.t[0], truth.t[-1]
    if window is not None:
        lo, hi = max(lo, window[0]), min(hi, window[1])
    keep = (est.t >= lo) & (est.t <= hi)
    if not keep.any():
        raise NoOverlap("estimate and ground truth do not overlap in time")
    t = est.t[keep]
    ref = np.column_stack([np.interp(t, truth.t, truth.xz[:, 0]), np.interp(t, truth.t, truth.xz[:, 1])])
    err = est.xz[keep] - ref
    rmse = np.sqrt((err**2).mean(axis=0))
    return AteReport(float(rmse[0]), float(rmse[1]), int(keep.sum()))


@dataclass(frozen=True)
class TrialSummary:
    mean_x: float
    std_x: float
    mean_z: float
    std_z: float
    n_trials: int

    def as_dict(self):
        return asdict(self)


def summarize_trials(reports) -> TrialSummary:
    """Mean and sample (n-1) standard deviation of per-trial RMSEs."""
    reports = list(reports)
    if not reports:
        raise ValueError("need at least one report")
    x = np.array([r.rmse_x for r in reports])
    z = np.array([r.rmse_z for r in reports])
    ddof = 1 if len(reports) > 1 else 0
    return TrialSummary(float(x.mean()), float(x.std(ddof=ddof)),
                        float(z.mean()), float(z.std(ddof=ddof)), len(reports))


def timing_summary(samples_ms):
    """mean/median/max (ms) for each stage in a {stage: [values]} mapping."""
    out = {}
    for stage, values in samples_ms.items():
        v = np.asarray(values, dtype=float)
        if len(v) == 0:
            continue
        out[stage] = {"mean": float(v.mean()), "median": float(np.median(v)),
                      "max": float(v.max()), "n": int(len(v))}
    return out


def format_report(name, rep: AteReport):
    return f"{name}: rmse_x={rep.rmse_x * 100:.2f} cm rmse_z={rep.rmse_z * 100:.2f} cm (n={rep.n_samples})"


def finite_or_none(v):
    return v if v is not None and math.isfinite(v) else None
