from __future__ import annotations

import csv

import numpy as np
import pytest

from prosvio.errors import EmptyCloud, FrameError
from prosvio.mapper import KeyframeSelector, Map2D, add_keyframe, select_keyframe
from prosvio.pointcloud import Frame, PointCloud2D


@pytest.mark.parametrize("d,expected", [(0.005, False), (0.03, True), (0.08, False),
                                        (0.01, True), (0.05, True)])
def test_keyframe_rule(d, expected):
    assert select_keyframe(d) is expected


def test_keyframe_rule_rejects_negative():
    with pytest.raises(ValueError):
        select_keyframe(-0.1)


def test_selector_measures_from_last_keyframe():
    sel = KeyframeSelector()
    assert sel.offer([0.0, 0.0])
    assert not sel.offer([0.004, 0.0])
    assert not sel.offer([0.008, 0.0])
    assert sel.offer([0.012, 0.0])  # accumulated slow motion eventually qualifies


def test_selector_recovers_after_a_jump():
    sel = KeyframeSelector()
    sel.offer([0.0, 0.0])
    assert not sel.offer([0.2, 0.0])
    assert sel.offer([0.22, 0.0])


def test_map_accumulates_shifted_clouds(tmp_path):
    m = Map2D()
    cloud = PointCloud2D([[0.0, 0.0], [1.0, 0.0]], frame=Frame.GROUND)
    add_keyframe(m, [1.0, 2.0], cloud)
    add_keyframe(m, [2.0, 2.0], cloud)
    assert len(m) == 2 and m.n_points == 4
    np.testing.assert_allclose(m.points(), [[1, 2], [2, 2], [2, 2], [3, 2]])
    np.testing.assert_array_equal(m.labelled_points()[:, 2], [0, 0, 1, 1])
    assert m.smoothed_points(1).shape == (4, 2)
    path = tmp_path / "map.csv"
    m.write_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["x", "z", "keyframe_index"] and len(rows) == 5


def test_add_keyframe_errors():
    with pytest.raises(EmptyCloud):
        add_keyframe(Map2D(), [0, 0], PointCloud2D(np.zeros((0, 2)), frame=Frame.GROUND))
    with pytest.raises(FrameError):
        add_keyframe(Map2D(), [0, 0], PointCloud2D([[0.0, 0.0]]))
    assert Map2D().points().shape == (0, 2)


def test_noiseless_map_at_true_poses_lies_on_the_terrain():
    from prosvio.pointcloud import Rotation2D, preprocess
    from prosvio.sim import GaitSpec, ImuNoise, TerrainSpec, simulate

    sim = simulate(TerrainSpec("stair", n_steps=3), GaitSpec(depth_noise_std=0.0), ImuNoise(0.0, 0.0))
    t = np.array([f.timestamp for f in sim.dataset.frames])
    poses, pitch = sim.gait.knee(t)[0], sim.gait.camera_pitch(t)
    m, sel = Map2D(), KeyframeSelector()
    for frame, pose, angle in zip(sim.dataset.frames, poses, pitch):
        if len(frame) and sel.offer(pose):
            add_keyframe(m, pose, preprocess(frame, Rotation2D(float(angle))))
    assert len(m) > 10
    assert m.n_points == sum(len(k.cloud) for k in m.keyframes)
    assert sim.terrain.distance_to(m.points()).max() < 1e-3
