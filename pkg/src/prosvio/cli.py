"""Command-line entry point: ``prosvio {sim,run,eval,trials,bench}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .config import RunConfig
from .dataset import load_dataset, read_truth, write_dataset
from .errors import ProsvioError
from .evalkit import AteReport, Trajectory, compute_ate, summarize_trials, timing_summary
from .features import TerrainType
from .pipeline import run, write_outputs

log = logging.getLogger("prosvio")


def _terrain_spec(args):
    from .sim import TerrainSpec

    return TerrainSpec(args.terrain, riser=args.riser, tread=args.tread, n_steps=args.steps,
                       obstacle_height=args.obstacle_height, obstacle_width=args.obstacle_width)


def _gait_spec(args, seed):
    from .sim import GaitSpec

    return GaitSpec(rng_seed=seed, n_strides=args.strides, stride_duration=args.stride_duration,
                    camera_fps=args.fps, imu_rate=args.imu_rate, depth_noise_std=args.depth_noise,
                    rays=args.rays)


def _simulate(args, seed):
    from .sim import ImuNoise, simulate

    return simulate(_terrain_spec(args), _gait_spec(args, seed), ImuNoise(args.sigma_a, args.sigma_ab))


def _add_sim_flags(p):
    p.add_argument("--terrain", default="stairs", help="stairs | obstacle | flat")
    p.add_argument("--riser", type=float, default=0.147, help="stair riser height (m)")
    p.add_argument("--tread", type=float, default=0.28, help="stair tread depth (m)")
    p.add_argument("--steps", type=int, default=10, help="stair levels including the floor")
    p.add_argument("--obstacle-height", type=float, default=0.14)
    p.add_argument("--obstacle-width", type=float, default=0.13)
    p.add_argument("--strides", type=int, default=None, help="number of strides (default: whole course)")
    p.add_argument("--stride-duration", type=float, default=1.2)
    p.add_argument("--fps", type=float, default=30.0, help="depth camera rate (Hz)")
    p.add_argument("--imu-rate", type=float, default=100.0, help="IMU rate (Hz)")
    p.add_argument("--depth-noise", type=float, default=0.005, help="range noise std (m)")
    p.add_argument("--sigma-a", type=float, default=0.05, help="accelerometer white noise (m/s^2)")
    p.add_argument("--sigma-ab", type=float, default=0.005, help="bias random-walk density")
    p.add_argument("--rays", type=int, default=1000, help="rays per depth frame")


def _load_config(args):
    cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    if getattr(args, "no_visual", False):
        cfg.use_visual = False
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    return cfg.validate()


def cmd_sim(args):
    sim = _simulate(args, args.seed)
    out = write_dataset(sim.dataset, args.out)
    log.info("wrote %d frames, %d IMU samples to %s", len(sim.dataset.frames), len(sim.dataset.imu), out)
    print(out)
    return 0


def cmd_run(args):
    dataset = load_dataset(args.dataset)
    result = run(dataset, _load_config(args))
    out = write_outputs(result, args.out, with_latency=args.with_latency)
    ate = result.metrics.get("ate")
    if ate:
        for part in ("knee", "toe"):
            log.info("%s ATE: x=%.2f cm z=%.2f cm", part, ate[part]["rmse_x"] * 100, ate[part]["rmse_z"] * 100)
    print(out)
    return 0


def cmd_eval(args):
    column = {"knee": ("knee_x", "knee_z"), "toe": ("toe_x", "toe_z")}[args.part]
    est = Trajectory.from_csv(args.trajectory, *column)
    source = Path(args.truth)
    window = tuple(args.window) if args.window else None
    if source.is_dir() or source.name.endswith(".json"):
        ds = load_dataset(source)
        if ds.truth is None:
            raise ProsvioError(f"{source} has no ground truth")
        truth = ds.truth
        if window is None and ds.terrain is TerrainType.OBSTACLE:
            window = ds.visible_window
    else:
        truth = read_truth(source)
    ref = Trajectory(truth.t, truth.knee if args.part == "knee" else truth.toe)
    report = compute_ate(est, ref, window)
    text = json.dumps({"part": args.part, "window": window, **report.as_dict()}, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return 0


def cmd_trials(args):
    cfg = _load_config(args)
    reports = []
    per_trial = []
    for seed in range(args.first_seed, args.first_seed + args.n):
        sim = _simulate(args, seed)
        cfg.seed = seed
        metrics = run(sim.dataset, cfg).metrics
        toe = metrics["ate"]["toe"]
        reports.append(AteReport(toe["rmse_x"], toe["rmse_z"], toe["n_samples"]))
        per_trial.append({"seed": seed, **metrics})
        log.info("seed %d: toe x=%.2f cm z=%.2f cm", seed, toe["rmse_x"] * 100, toe["rmse_z"] * 100)
    summary = {"terrain": TerrainType.parse(args.terrain).value, "toe": summarize_trials(reports).as_dict(),
               "trials": per_trial}
    text = json.dumps(summary, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(json.dumps(summary["toe"], indent=2))
    return 0


def cmd_bench(args):
    """Time the visual stages on stair frames of roughly ``--points`` points each."""
    from .features import extract_terrain_features
    from .icp import icp_translation
    from .pointcloud import PreprocessConfig, Rotation2D, preprocess
    from .sim import GaitSpec, TerrainSpec, simulate

    gait = GaitSpec(rng_seed=args.seed, rays=args.points, lateral_spread=0.04)
    sim = simulate(TerrainSpec(TerrainType.STAIR, n_steps=10), gait)
    pitch = sim.gait.camera_pitch(np.array([f.timestamp for f in sim.dataset.frames]))
    cfg = PreprocessConfig()
    samples = {"preprocess": [], "features": [], "icp": [], "visual": []}
    prev = None
    timed = 0
    for i, frame in enumerate(sim.dataset.frames):
        if timed >= args.frames:
            break
        t0 = time.perf_counter()
        ground = preprocess(frame, Rotation2D(float(pitch[i])), cfg)
        t1 = time.perf_counter()
        try:
            feats = extract_terrain_features(ground, TerrainType.STAIR, rng_seed=i)
        except ProsvioError:
            prev = None
            continue
        t2 = time.perf_counter()
        if prev is None:
            prev = feats
            continue
        icp_translation(feats.points, prev.points)
        t3 = time.perf_counter()
        prev = feats
        for key, value in (("preprocess", t1 - t0), ("features", t2 - t1), ("icp", t3 - t2), ("visual", t3 - t0)):
            samples[key].append(value * 1e3)
        timed += 1
    stats = timing_summary(samples)
    if args.json:
        print(json.dumps(stats, indent=2))
    else:
        print(f"{'stage':<12}{'mean ms':>10}{'median ms':>12}{'max ms':>10}")
        for stage, s in stats.items():
            print(f"{stage:<12}{s['mean']:>10.2f}{s['median']:>12.2f}{s['max']:>10.2f}")
        print(f"frames: {timed}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="prosvio", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sim", help="write a simulated dataset with ground truth")
    _add_sim_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output dataset directory")
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("run", help="estimate knee and foot trajectories for a dataset")
    p.add_argument("dataset", help="dataset directory or manifest.json")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", help="RunConfig JSON")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--no-visual", action="store_true", help="inertial-only baseline")
    p.add_argument("--with-latency", action="store_true",
                   help="add per-stage timing to metrics.json (makes it run-dependent)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="per-axis ATE of a trajectory CSV against ground truth")
    p.add_argument("trajectory", help="trajectory.csv written by run")
    p.add_argument("truth", help="truth.csv, dataset directory or manifest.json")
    p.add_argument("--part", choices=("knee", "toe"), default="toe")
    p.add_argument("--window", type=float, nargs=2, metavar=("T0", "T1"))
    p.add_argument("--out", help="write the report JSON here as well")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("trials", help="simulate and evaluate several seeded trials")
    _add_sim_flags(p)
    p.add_argument("-n", type=int, default=5, help="number of trials")
    p.add_argument("--first-seed", type=int, default=0)
    p.add_argument("--config", help="RunConfig JSON")
    p.add_argument("--no-visual", action="store_true")
    p.add_argument("--out", help="aggregate metrics JSON")
    p.set_defaults(func=cmd_trials)

    p = sub.add_parser("bench", help="per-stage latency of the visual front end")
    p.add_argument("--frames", type=int, default=100)
    p.add_argument("--points", type=int, default=2000, help="approximate points per frame")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ProsvioError, ValueError, OSError) as exc:
        print(f"prosvio {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
