import numpy as np
import pytest

from stereopose.geometry import (
    apply_transform,
    euler_zyx,
    invert_rigid,
    rigid,
    rot_x,
    rot_y,
    rot_z,
)


@pytest.mark.parametrize("rot", [rot_x, rot_y, rot_z])
def test_rotations_orthonormal(rot, rng):
    for angle in rng.uniform(-np.pi, np.pi, size=20):
        R = rot(angle)
        assert np.allclose(R @ R.T, np.eye(3), atol=1e-12)
        assert np.linalg.det(R) == pytest.approx(1.0)


def test_rotation_hand_values():
    # 90 degrees about Z maps +X to +Y
    assert np.allclose(rot_z(np.pi / 2) @ [1, 0, 0], [0, 1, 0], atol=1e-12)
    # 90 degrees about X maps +Y to +Z
    assert np.allclose(rot_x(np.pi / 2) @ [0, 1, 0], [0, 0, 1], atol=1e-12)
    # 90 degrees about Y maps +Z to +X
    assert np.allclose(rot_y(np.pi / 2) @ [0, 0, 1], [1, 0, 0], atol=1e-12)


def test_euler_zyx_order():
    yaw, pitch, roll = 0.3, -0.2, 0.5
    expected = rot_z(yaw) @ rot_y(pitch) @ rot_x(roll)
    assert np.allclose(euler_zyx(yaw, pitch, roll), expected)
    # pure single-axis cases reduce to the primitive rotations
    assert np.allclose(euler_zyx(yaw, 0, 0), rot_z(yaw))
    assert np.allclose(euler_zyx(0, pitch, 0), rot_y(pitch))
    assert np.allclose(euler_zyx(0, 0, roll), rot_x(roll))


def test_rigid_inverse_roundtrip(rng):
    for _ in range(20):
        R = euler_zyx(*rng.uniform(-np.pi, np.pi, size=3))
        t = rng.uniform(-50, 50, size=3)
        T = rigid(R, t)
        assert T.shape == (4, 4)
        assert np.allclose(T[3], [0, 0, 0, 1])
        assert np.allclose(invert_rigid(T) @ T, np.eye(4), atol=1e-12)
        pts = rng.uniform(-100, 100, size=(7, 3))
        back = apply_transform(invert_rigid(T), apply_transform(T, pts))
        assert np.allclose(back, pts, atol=1e-9)


def test_apply_transform_is_column_vector_convention():
    T = rigid(rot_z(np.pi / 2), (1.0, 2.0, 3.0))
    # p' = R p + t for a single point
    assert np.allclose(apply_transform(T, [1.0, 0.0, 0.0]), [1.0, 3.0, 3.0])
    # broadcasting over a batch keeps the last axis as xyz
    batch = np.zeros((4, 3))
    assert apply_transform(T, batch).shape == (4, 3)
    assert np.allclose(apply_transform(T, batch), np.tile([1.0, 2.0, 3.0], (4, 1)))
