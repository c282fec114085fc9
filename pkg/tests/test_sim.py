from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from prosvio.eskf import GRAVITY
from prosvio.errors import NoIntersections
from prosvio.features import TerrainType
from prosvio.pointcloud import Rotation2D
from prosvio.sim import (GaitSpec, ImuNoise, TerrainSpec, cycloid, gen_gait, gen_terrain, render_depth,
                         simulate, simulate_imu, stream_times)
from prosvio.sim.sensors import cast


def test_stair_profile_and_edges():
    t = gen_terrain(TerrainSpec("stairs", riser=0.15, tread=0.3, n_steps=4))
    np.testing.assert_allclose(t.edges(), [[0.0, 0.15], [0.3, 0.3], [0.6, 0.45]])
    np.testing.assert_allclose(t.height_at([-1.0, 0.1, 0.45, 1.0]), [0.0, 0.15, 0.3, 0.45])


def test_obstacle_profile_and_edges():
    t = gen_terrain(TerrainSpec("obstacle", obstacle_height=0.14, obstacle_width=0.13))
    np.testing.assert_allclose(t.edges(), [[0.0, 0.14], [0.13, 0.14]])
    assert t.height_at([0.05])[0] == pytest.approx(0.14)
    assert len(gen_terrain(TerrainSpec("flat")).edges()) == 0


def test_terrain_spec_validation():
    with pytest.raises(ValueError):
        TerrainSpec("stair", riser=-0.1)
    with pytest.raises(ValueError):
        TerrainSpec("obstacle", obstacle_width=0.0)
    with pytest.raises(ValueError):
        GaitSpec(camera_fps=0)


def test_cast_hits_floor_at_known_range():
    t = gen_terrain(TerrainSpec("flat"))
    r = cast(t, np.array([0.0, 1.0]), np.array([[0.0, -1.0], [math.sqrt(0.5), -math.sqrt(0.5)], [0.0, 1.0]]))
    np.testing.assert_allclose(r[:2], [1.0, math.sqrt(2.0)])
    assert np.isinf(r[2])


@given(st.floats(-1.0, -0.2), st.floats(0.3, 0.8), st.floats(-1.2, 0.0))
def test_noiseless_scan_lies_on_terrain(pitch, height, x):
    terrain = gen_terrain(TerrainSpec("stair"))
    cam = np.array([x, height + 0.3])
    scan = render_depth(terrain, cam, pitch, 1.08, 200)
    world = Rotation2D(pitch).apply(scan.points) + cam
    assert terrain.distance_to(world).max() < 1e-9


def test_render_raises_when_blind():
    with pytest.raises(NoIntersections):
        render_depth(gen_terrain(TerrainSpec("flat")), np.array([0.0, 1.0]), 1.0, 0.5, 50)


def test_cycloid_endpoints():
    s, ds, dds = cycloid(np.array([0.0, 0.5, 1.0]))
    np.testing.assert_allclose(s, [0.0, 0.5, 1.0])
    np.testing.assert_allclose(ds[[0, 2]], 0.0, atol=1e-12)
    np.testing.assert_allclose(dds[[0, 2]], 0.0, atol=1e-12)


def test_stream_times():
    np.testing.assert_allclose(stream_times(0.1, 30.0), [0.0, 1 / 30, 2 / 30, 3 / 30])


def test_knee_derivatives_match_finite_differences():
    gait = gen_gait(gen_terrain(TerrainSpec("stair")), GaitSpec())
    t = np.linspace(0.5, gait.duration - 0.5, 400)
    h = 1e-5
    p_plus, p_minus = gait.knee(t + h)[0], gait.knee(t - h)[0]
    _, vel, acc = gait.knee(t)
    np.testing.assert_allclose((p_plus - p_minus) / (2 * h), vel, atol=1e-5)
    v_plus, v_minus = gait.knee(t + h)[1], gait.knee(t - h)[1]
    np.testing.assert_allclose((v_plus - v_minus) / (2 * h), acc, atol=1e-3)


@pytest.mark.parametrize("kind", ["stair", "obstacle", "flat"])
def test_foot_never_enters_terrain(kind):
    terrain = gen_terrain(TerrainSpec(kind))
    gait = gen_gait(terrain, GaitSpec())
    t = np.linspace(0, gait.duration, 3000)
    leg = gait.leg(t)
    for part in ("toe", "heel", "ankle"):
        assert np.all(leg[part][:, 1] >= terrain.height_at(leg[part][:, 0]) - 1e-9)


def test_stair_climb_reaches_the_top():
    spec = TerrainSpec("stair", n_steps=10)
    gait = gen_gait(gen_terrain(spec), GaitSpec())
    assert gait.duration == pytest.approx(12.3)
    final_ankle = gait.leg([gait.duration])["ankle"][0]
    assert final_ankle[1] == pytest.approx(9 * spec.riser)


def test_perfect_imu_reports_specific_force():
    t = np.array([0.0, 0.01])
    acc = np.array([[1.0, 0.0], [0.0, 2.0]])
    samples, bias = simulate_imu(t, acc, [0.0, 0.3], ImuNoise(0.0, 0.0))
    np.testing.assert_allclose(bias, 0.0)
    np.testing.assert_allclose(samples[0].accel_body, acc[0] - GRAVITY)
    np.testing.assert_allclose(samples[1].rot.apply(samples[1].accel_body) + GRAVITY, acc[1], atol=1e-12)


def test_simulate_streams_and_determinism(short_stair_run):
    ds = short_stair_run.dataset
    assert ds.terrain is TerrainType.STAIR
    assert len(ds.frames) == len(ds.encoders)
    duration = short_stair_run.gait.duration
    assert len(ds.frames) == math.floor(duration * 30 + 1e-9) + 1
    assert len(ds.imu) == math.floor(duration * 100 + 1e-9) + 1
    assert all(len(f) > 100 for f in ds.frames)
    again = simulate(TerrainSpec("stair", n_steps=3), GaitSpec(rng_seed=0)).dataset
    np.testing.assert_array_equal(again.frames[5].points, ds.frames[5].points)
    other = simulate(TerrainSpec("stair", n_steps=3), GaitSpec(rng_seed=1)).dataset
    assert not np.array_equal(other.frames[5].points, ds.frames[5].points)


def test_obstacle_visibility_window(short_obstacle_run):
    window = short_obstacle_run.dataset.visible_window
    assert window is not None and 0.0 <= window[0] < window[1] <= short_obstacle_run.gait.duration


def test_blind_frames_are_empty():
    run = simulate(TerrainSpec("flat"), GaitSpec(n_strides=7), ImuNoise(0, 0))
    blind = [f for f in run.dataset.frames if len(f) == 0]
    assert blind and blind[-1] is run.dataset.frames[-1]
