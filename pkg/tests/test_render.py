import numpy as np
import pytest

from stereopose.camera import LEFT, project_pose
from stereopose.geometry import apply_transform
from stereopose.motion import MotionClip, device_pose, sample_profile
from stereopose.render import (
    BACKGROUND_LEVELS,
    limb_colors,
    render_frame,
    render_view,
    to_uint8,
)
from stereopose.skeleton import NUM_JOINTS, Pose3D, build_topology


@pytest.fixture(scope="module")
def profile():
    return sample_profile(np.random.default_rng(7))


@pytest.fixture(scope="module")
def pose_dev(profile):
    clip = MotionClip.constant("standing_whole_body", 1.0)
    pose, _ = device_pose(clip, 0, profile)
    return pose


def _background(seed: int, size: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    img = rng.uniform(*BACKGROUND_LEVELS, size=(size, size, 3))
    return img.astype(np.float64).astype(np.float32)


def test_to_uint8_mapping():
    img = np.array([[[0.0, 0.5, 1.0]]], dtype=np.float32)
    out = to_uint8(img)
    assert out.dtype == np.uint8
    assert out.tolist() == [[[0, 128, 255]]]
    clipped = to_uint8(np.array([[[-0.2, 1.3, 0.999]]], dtype=np.float32))
    assert clipped.tolist() == [[[0, 255, 255]]]


def test_render_view_shape_dtype_range(pose_dev, rig, profile):
    img = render_view(pose_dev, rig, profile, LEFT, noise_seed=11)
    size = rig.intrinsics.image_size
    assert img.shape == (size, size, 3)
    assert img.dtype == np.float32
    assert img.min() >= 0.0 and img.max() <= 1.0


def test_render_view_deterministic(pose_dev, rig, profile):
    a = render_view(pose_dev, rig, profile, LEFT, noise_seed=11)
    b = render_view(pose_dev, rig, profile, LEFT, noise_seed=11)
    assert np.array_equal(a, b)


def test_noise_seed_changes_background(pose_dev, rig, profile):
    a = render_view(pose_dev, rig, profile, LEFT, noise_seed=11)
    b = render_view(pose_dev, rig, profile, LEFT, noise_seed=12)
    assert not np.array_equal(a, b)


def test_invisible_pose_leaves_pure_background(rig, profile):
    # every joint far behind the cameras: theta > half-FOV in both views
    coords = np.tile(np.array([0.0, -500.0, 0.0]), (NUM_JOINTS, 1))
    coords[:, 2] = np.linspace(-10.0, 10.0, NUM_JOINTS)
    pose = Pose3D(coords=coords, frame="device")
    img = render_view(pose, rig, profile, LEFT, noise_seed=11)
    assert np.array_equal(img, _background(11, rig.intrinsics.image_size))


def test_foreground_coverage(pose_dev, rig, profile):
    img = render_view(pose_dev, rig, profile, LEFT, noise_seed=11)
    bg = _background(11, rig.intrinsics.image_size)
    changed = np.any(img != bg, axis=-1)
    frac = changed.mean()
    assert 0.005 < frac < 0.6
    # splatted colors may exceed the background band in either direction
    assert img[changed].min() < BACKGROUND_LEVELS[0] or img[changed].max() > BACKGROUND_LEVELS[1]


def test_limb_colors_deterministic_and_bounded():
    a = limb_colors(3, 16)
    b = limb_colors(3, 16)
    c = limb_colors(4, 16)
    assert a.shape == (16, 3)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert a.min() >= 0.25 and a.max() <= 0.95


def test_appearance_seed_changes_foreground_only(pose_dev, rig):
    rng = np.random.default_rng(0)
    p1 = sample_profile(rng)
    p2 = sample_profile(np.random.default_rng(1))
    assert p1.appearance_seed != p2.appearance_seed
    a = render_view(pose_dev, rig, p1, LEFT, noise_seed=11)
    b = render_view(pose_dev, rig, p1, LEFT, noise_seed=11)
    assert np.array_equal(a, b)
    # same noise seed, different appearance: only the character pixels move
    c = render_view(pose_dev, rig, p2, LEFT, noise_seed=11)
    bg = _background(11, rig.intrinsics.image_size)
    untouched = np.all(a == bg, axis=-1) & np.all(c == bg, axis=-1)
    assert np.array_equal(a[untouched], c[untouched])
    assert not np.array_equal(a, c)


def test_render_frame_record_consistency(pose_dev, rig, profile):
    clip = MotionClip.constant("standing_whole_body", 1.0)
    _, T = device_pose(clip, 0, profile)
    img_l, img_r, record = render_frame(
        pose_dev, rig, profile, world_from_device=T, noise_seed=5,
        frame_id="m1:0", motion_category="standing_whole_body",
        left_image="l.png", right_image="r.png",
    )
    assert img_l.dtype == np.uint8 and img_r.dtype == np.uint8
    assert not np.array_equal(img_l, img_r)
    kps_l, kps_r = project_pose(pose_dev, rig, build_topology())
    assert np.array_equal(record.keypoints_left.coords, kps_l.coords)
    assert np.array_equal(record.keypoints_right.visible, kps_r.visible)
    assert np.array_equal(record.joints_device, pose_dev.coords)
    assert np.allclose(record.joints_world, apply_transform(T, pose_dev.coords))
    assert np.allclose(record.camera_pose_left, T @ rig.device_from_camera(LEFT))
    assert record.frame_id == "m1:0"
    assert record.left_image == "l.png"


def test_render_frame_rejects_world_frame(rig, profile):
    coords = np.zeros((NUM_JOINTS, 3))
    coords[:, 1] = np.linspace(50.0, 80.0, NUM_JOINTS)
    pose = Pose3D(coords=coords, frame="world")
    with pytest.raises(ValueError):
        render_frame(pose, rig, profile)


def test_render_frame_deterministic(pose_dev, rig, profile):
    a_l, a_r, _ = render_frame(pose_dev, rig, profile, noise_seed=9)
    b_l, b_r, _ = render_frame(pose_dev, rig, profile, noise_seed=9)
    assert np.array_equal(a_l, b_l)
    assert np.array_equal(a_r, b_r)
