import numpy as np
import pytest

from stereopose.motion import MotionClip, device_pose, sample_profile
from stereopose.records import (
    REPROJECTION_TOLERANCE_PX,
    DatasetManifest,
    FrameRecord,
    MotionEntry,
    load_record,
    manifest_path,
    save_record,
    validate_frame,
)
from stereopose.render import render_frame


@pytest.fixture(scope="module")
def frame(rig_module):
    profile = sample_profile(np.random.default_rng(2))
    clip = MotionClip.constant("standing_whole_body", 1.0)
    pose_dev, T = device_pose(clip, 0, profile)
    _, _, record = render_frame(
        pose_dev, rig_module, profile, world_from_device=T, noise_seed=3,
        frame_id="m0:0", motion_category="standing_whole_body",
        left_image="m0/frame_0.left.png", right_image="m0/frame_0.right.png",
    )
    return record


@pytest.fixture(scope="module")
def rig_module():
    from stereopose.camera import RigConfig

    return RigConfig().rig()


def test_record_round_trip_byte_identical(tmp_path, frame):
    p1, p2 = tmp_path / "a.meta", tmp_path / "b.meta"
    save_record(p1, frame)
    back = load_record(p1)
    save_record(p2, back)
    assert p1.read_bytes() == p2.read_bytes()
    assert back.frame_id == frame.frame_id
    assert np.array_equal(back.joints_device, frame.joints_device)
    assert np.array_equal(back.keypoints_left.coords, frame.keypoints_left.coords)
    assert np.array_equal(back.keypoints_left.visible, frame.keypoints_left.visible)
    assert np.array_equal(back.camera_pose_right, frame.camera_pose_right)


def test_missing_fields_reported(frame):
    partial = FrameRecord(frame_id="x")
    missing = partial.missing_fields()
    assert "joints_device" in missing
    assert "keypoints_left" in missing
    assert "frame_id" not in missing
    assert frame.missing_fields() == []


def test_validate_frame_structured_failure_on_missing(rig_module):
    report = validate_frame(FrameRecord(frame_id="x"), rig_module)
    assert not report.ok
    assert "joints_world" in report.missing_fields
    assert np.isnan(report.max_residual_px)


def test_validate_frame_passes_generated(frame, rig_module):
    report = validate_frame(frame, rig_module)
    assert report.ok
    assert report.visibility_mismatches == 0
    assert report.max_residual_px <= REPROJECTION_TOLERANCE_PX


def test_validate_frame_catches_corrupted_keypoints(frame, rig_module):
    from stereopose.skeleton import Keypoints2D

    bad = load_record_roundtrip(frame)
    coords = bad.keypoints_left.coords.copy()
    coords[bad.keypoints_left.visible] += 0.8  # > 0.5 px
    bad.keypoints_left = Keypoints2D(coords=coords, visible=bad.keypoints_left.visible)
    report = validate_frame(bad, rig_module)
    assert not report.ok
    assert report.max_residual_px > REPROJECTION_TOLERANCE_PX


def test_validate_frame_counts_visibility_mismatches(frame, rig_module):
    from stereopose.skeleton import Keypoints2D

    bad = load_record_roundtrip(frame)
    visible = bad.keypoints_left.visible.copy()
    visible[np.flatnonzero(visible)[:2]] = False
    bad.keypoints_left = Keypoints2D(coords=bad.keypoints_left.coords, visible=visible)
    report = validate_frame(bad, rig_module)
    assert not report.ok
    assert report.visibility_mismatches == 2


def load_record_roundtrip(frame):
    # deep copy through the serializer so mutation can't leak between tests
    return FrameRecord.from_dict(frame.to_dict())


def test_manifest_round_trip(tmp_path, frame):
    save_record(tmp_path / "m0_f0.meta", frame)
    entry = MotionEntry(
        motion_id="m0", category="standing_whole_body", character_id="char_000",
        frame_count=1, frames=["m0_f0.meta"],
    )
    manifest = DatasetManifest(split="train", motions=[entry])
    assert manifest.frame_count == 1
    assert manifest.motion_ids == {"m0"}
    path = manifest_path(tmp_path, "train")
    assert path.name == "manifest.train"
    manifest.save(path)
    back = DatasetManifest.load(path, check_files=False)
    assert back.split == "train"
    assert back.motions[0].to_dict() == entry.to_dict()
    # the file check passes when the frame actually exists
    DatasetManifest.load(path, check_files=True)


def test_manifest_check_files_detects_missing(tmp_path):
    entry = MotionEntry(
        motion_id="m1", category="boxing", character_id="char_001",
        frame_count=1, frames=["nowhere.meta"],
    )
    path = manifest_path(tmp_path, "val")
    DatasetManifest(split="val", motions=[entry]).save(path)
    with pytest.raises(FileNotFoundError):
        DatasetManifest.load(path, check_files=True)
