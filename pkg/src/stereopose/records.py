"""On-disk frame metadata and dataset manifests.

Each rendered frame gets a JSON `.meta` file holding camera poses, 3D
joints in world and device frames, reprojected keypoints per view, and
the motion category. One JSON manifest per split lists the motions and
their frame files. Serialization is canonical (sorted keys, fixed float
repr via json) so identical inputs give byte-identical files.
"""

from dataclasses import dataclass
import json
from pathlib import Path

import numpy as np

from .camera import StereoRig, project_pose
from .skeleton import (
    NUM_JOINTS,
    Keypoints2D,
    Pose3D,
    build_topology,
)

REPROJECTION_TOLERANCE_PX = 0.5

_TOPOLOGY = build_topology()

_REQUIRED_FIELDS = (
    "frame_id",
    "left_image",
    "right_image",
    "camera_pose_left",
    "camera_pose_right",
    "joints_world",
    "joints_device",
    "keypoints_left",
    "keypoints_right",
    "motion_category",
)


@dataclass
class FrameRecord:
    """Complete per-frame metadata; fields are None while partially loaded."""

    frame_id: str | None = None
    left_image: str | None = None  # path relative to the dataset root
    right_image: str | None = None
    camera_pose_left: np.ndarray | None = None  # 4x4 world-from-camera
    camera_pose_right: np.ndarray | None = None
    joints_world: np.ndarray | None = None  # (16, 3) cm
    joints_device: np.ndarray | None = None  # (16, 3) cm
    keypoints_left: Keypoints2D | None = None
    keypoints_right: Keypoints2D | None = None
    motion_category: str | None = None

    def missing_fields(self) -> list[str]:
        return [k for k in _REQUIRED_FIELDS if getattr(self, k) is None]

    def to_dict(self) -> dict:
        def arr(a):
            return None if a is None else np.asarray(a).tolist()

        def kps(k):
            if k is None:
                return None
            return {"coords": k.coords.tolist(), "visible": k.visible.tolist()}

        return {
            "frame_id": self.frame_id,
            "left_image": self.left_image,
            "right_image": self.right_image,
            "camera_pose_left": arr(self.camera_pose_left),
            "camera_pose_right": arr(self.camera_pose_right),
            "joints_world": arr(self.joints_world),
            "joints_device": arr(self.joints_device),
            "keypoints_left": kps(self.keypoints_left),
            "keypoints_right": kps(self.keypoints_right),
            "motion_category": self.motion_category,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FrameRecord":
        def arr(key, shape):
            v = d.get(key)
            if v is None:
                return None
            a = np.asarray(v, dtype=np.float64)
            if a.shape != shape:
                raise ValueError(f"{key} must have shape {shape}, got {a.shape}")
            return a

        def kps(key):
            v = d.get(key)
            if v is None:
                return None
            return Keypoints2D(
                coords=np.asarray(v["coords"], dtype=np.float64),
                visible=np.asarray(v["visible"], dtype=bool),
            )

        return cls(
            frame_id=d.get("frame_id"),
            left_image=d.get("left_image"),
            right_image=d.get("right_image"),
            camera_pose_left=arr("camera_pose_left", (4, 4)),
            camera_pose_right=arr("camera_pose_right", (4, 4)),
            joints_world=arr("joints_world", (NUM_JOINTS, 3)),
            joints_device=arr("joints_device", (NUM_JOINTS, 3)),
            keypoints_left=kps("keypoints_left"),
            keypoints_right=kps("keypoints_right"),
            motion_category=d.get("motion_category"),
        )


def _dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def save_record(path, record: FrameRecord) -> None:
    Path(path).write_text(_dump_json(record.to_dict()))


def load_record(path) -> FrameRecord:
    return FrameRecord.from_dict(json.loads(Path(path).read_text()))


@dataclass
class ValidationReport:
    ok: bool
    missing_fields: list[str]
    max_residual_px: float  # nan when reprojection could not run
    visibility_mismatches: int
    threshold_px: float = REPROJECTION_TOLERANCE_PX


def validate_frame(record: FrameRecord, rig: StereoRig) -> ValidationReport:
    """Reproject joints_device through the rig and compare stored keypoints.

    Missing fields produce a structured failure instead of an exception.
    The residual is the max pixel distance over keypoints both stored and
    recomputed as visible; differing visibility flags are counted apart.
    """
    missing = record.missing_fields()
    if missing:
        return ValidationReport(
            ok=False,
            missing_fields=missing,
            max_residual_px=float("nan"),
            visibility_mismatches=0,
        )
    pose = Pose3D(coords=record.joints_device, frame="device")
    kps_l, kps_r = project_pose(pose, rig, _TOPOLOGY)
    max_residual = 0.0
    mismatches = 0
    for fresh, stored in ((kps_l, record.keypoints_left), (kps_r, record.keypoints_right)):
        mismatches += int(np.sum(fresh.visible != stored.visible))
        both = fresh.visible & stored.visible
        if np.any(both):
            d = np.linalg.norm(fresh.coords[both] - stored.coords[both], axis=1)
            max_residual = max(max_residual, float(d.max()))
    ok = mismatches == 0 and max_residual <= REPROJECTION_TOLERANCE_PX
    return ValidationReport(
        ok=ok,
        missing_fields=[],
        max_residual_px=max_residual,
        visibility_mismatches=mismatches,
    )


@dataclass
class MotionEntry:
    motion_id: str
    category: str
    character_id: str
    frame_count: int
    frames: list  # .meta paths relative to the dataset root

    def to_dict(self) -> dict:
        return {
            "motion_id": self.motion_id,
            "category": self.category,
            "character_id": self.character_id,
            "frame_count": self.frame_count,
            "frames": list(self.frames),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MotionEntry":
        return cls(
            motion_id=d["motion_id"],
            category=d["category"],
            character_id=d["character_id"],
            frame_count=int(d["frame_count"]),
            frames=list(d["frames"]),
        )


@dataclass
class DatasetManifest:
    split: str
    motions: list  # of MotionEntry

    @property
    def frame_count(self) -> int:
        return sum(m.frame_count for m in self.motions)

    @property
    def motion_ids(self) -> set:
        return {m.motion_id for m in self.motions}

    def to_dict(self) -> dict:
        return {
            "split": self.split,
            "motions": [m.to_dict() for m in self.motions],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetManifest":
        return cls(
            split=d["split"],
            motions=[MotionEntry.from_dict(m) for m in d["motions"]],
        )

    def save(self, path) -> None:
        Path(path).write_text(_dump_json(self.to_dict()))

    @classmethod
    def load(cls, path, check_files: bool = True) -> "DatasetManifest":
        path = Path(path)
        manifest = cls.from_dict(json.loads(path.read_text()))
        if check_files:
            root = path.parent
            missing = [
                f
                for m in manifest.motions
                for f in m.frames
                if not (root / f).exists()
            ]
            if missing:
                raise FileNotFoundError(
                    f"manifest {path} references {len(missing)} missing files,"
                    f" first: {missing[0]}"
                )
        return manifest


def manifest_path(root, split: str) -> Path:
    return Path(root) / f"manifest.{split}"
