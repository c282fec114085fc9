from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from prosvio.errors import FrameError
from prosvio.pointcloud import (Frame, PointCloud2D, PointCloud3D, PreprocessConfig, Rotation2D,
                                preprocess, project_sagittal, smooth_knn, subsample_uniform,
                                to_camera_frame, to_ground_frame)

coords = st.floats(-10, 10, allow_nan=False)
clouds2d = arrays(float, st.tuples(st.integers(1, 40), st.just(2)), elements=coords)
angles = st.floats(-math.pi, math.pi, allow_nan=False)


def test_project_sagittal_keeps_slab_and_drops_lateral():
    pts = np.array([[1.0, 0.0, 2.0], [1.0, 0.049, 3.0], [1.0, -0.05, 4.0], [2.0, 0.2, 5.0]])
    flat = project_sagittal(PointCloud3D(pts, 0.5), 0.05)
    np.testing.assert_array_equal(flat.points, [[1.0, 2.0], [1.0, 3.0]])
    assert flat.frame is Frame.CAMERA and flat.timestamp == 0.5


def test_project_sagittal_rejects_bad_width():
    with pytest.raises(ValueError):
        project_sagittal(PointCloud3D(np.zeros((1, 3))), 0.0)


def test_cloud_validation():
    with pytest.raises(ValueError):
        PointCloud3D([[0.0, np.nan, 0.0]])
    with pytest.raises(ValueError):
        PointCloud3D(np.zeros((1, 3)), timestamp=-1.0)
    assert len(PointCloud2D([])) == 0


@given(clouds2d, angles)
def test_rotation_is_an_isometry(pts, angle):
    rot = Rotation2D(angle)
    out = rot.apply(pts)
    np.testing.assert_allclose(np.linalg.norm(out, axis=1), np.linalg.norm(pts, axis=1), atol=1e-9)
    d_in = np.linalg.norm(pts[:, None] - pts[None], axis=2)
    d_out = np.linalg.norm(out[:, None] - out[None], axis=2)
    np.testing.assert_allclose(d_out, d_in, atol=1e-9)
    np.testing.assert_allclose(rot.matrix @ rot.matrix.T, np.eye(2), atol=1e-12)
    assert np.linalg.det(rot.matrix) == pytest.approx(1.0)


@given(clouds2d, angles)
def test_ground_camera_round_trip(pts, angle):
    cam = PointCloud2D(pts)
    rot = Rotation2D(angle)
    ground = to_ground_frame(cam, rot)
    assert ground.frame is Frame.GROUND
    back = to_camera_frame(ground, rot)
    np.testing.assert_allclose(back.points, pts, atol=1e-9)


def test_positive_pitch_turns_forward_axis_up():
    np.testing.assert_allclose(Rotation2D(math.pi / 2).apply([1.0, 0.0]), [0.0, 1.0], atol=1e-12)


def test_frame_tags_are_enforced():
    cam = PointCloud2D(np.zeros((2, 2)))
    ground = to_ground_frame(cam, Rotation2D(0.1))
    with pytest.raises(FrameError):
        to_ground_frame(ground, Rotation2D(0.1))
    with pytest.raises(FrameError):
        to_camera_frame(cam, Rotation2D(0.1))


def test_smooth_knn_k1_is_identity_and_line_stays_on_line():
    x = np.linspace(0, 1, 50)
    cloud = PointCloud2D(np.column_stack([x, 0.3 * x + 0.1]))
    np.testing.assert_array_equal(smooth_knn(cloud, 1).points, cloud.points)
    out = smooth_knn(cloud, 8).points
    assert len(out) == 50
    np.testing.assert_allclose(out[:, 1], 0.3 * out[:, 0] + 0.1, atol=1e-12)
    with pytest.raises(ValueError):
        smooth_knn(cloud, 0)


@given(clouds2d, st.integers(1, 10))
def test_smooth_knn_stays_in_bounding_box(pts, k):
    out = smooth_knn(PointCloud2D(pts), k).points
    assert out.shape == pts.shape
    assert np.all(out >= pts.min(axis=0) - 1e-9) and np.all(out <= pts.max(axis=0) + 1e-9)


def test_subsample_uniform():
    cloud = PointCloud2D(np.arange(20.0).reshape(10, 2))
    assert subsample_uniform(cloud, 20) is cloud
    sub = subsample_uniform(cloud, 4)
    assert len(sub) == 4
    np.testing.assert_array_equal(sub.points[[0, -1]], cloud.points[[0, -1]])


def test_preprocess_chain_outputs_ground_frame():
    rng = np.random.default_rng(0)
    pts = np.column_stack([rng.uniform(0, 1, 200), rng.uniform(-0.1, 0.1, 200), np.zeros(200)])
    out = preprocess(PointCloud3D(pts, 1.0), Rotation2D(0.0), PreprocessConfig(knn=4))
    assert out.frame is Frame.GROUND and out.timestamp == 1.0
    assert len(out) == int((np.abs(pts[:, 1]) < 0.05).sum())
    np.testing.assert_allclose(out.points[:, 1], 0.0, atol=1e-12)
    with pytest.raises(ValueError):
        PreprocessConfig(half_width=-1).validate()
