"""Canonical body skeleton shared by every stage of the pipeline.

The skeleton has 16 joints forming a tree rooted at the neck. The 2D
stage works on a 15-joint subset (everything except the head); the 3D
stage outputs all 16 joints. Joint order is fixed: unsided joints first
(alphabetical), then the left chain proximal-to-distal, then the right
chain. All coordinates are centimeters unless a function says otherwise.
"""

from dataclasses import dataclass
import hashlib

import numpy as np

JOINT_NAMES = (
    "head",
    "neck",
    "left_upper_arm",
    "left_lower_arm",
    "left_hand",
    "left_thigh",
    "left_calf",
    "left_foot",
    "left_ball_of_foot",
    "right_upper_arm",
    "right_lower_arm",
    "right_hand",
    "right_thigh",
    "right_calf",
    "right_foot",
    "right_ball_of_foot",
)

NUM_JOINTS = 16
NUM_HEATMAP_JOINTS = 15
HEATMAP_SIZE = 64

# Frames a pose can be expressed in. "device" is anchored at the midpoint
# between the two cameras; "pelvis" is relative to the hip midpoint and is
# only used for dataset statistics.
POSE_FRAMES = ("world", "device", "pelvis")


@dataclass(frozen=True)
class SkeletonTopology:
    """Joint names, parent tree and derived index sets."""

    joint_names: tuple[str, ...]
    parent_index: tuple[int, ...]  # -1 marks the root
    heatmap_subset: tuple[int, ...]
    bones: tuple[tuple[int, int], ...]  # (parent, child) pairs

    @property
    def num_joints(self) -> int:
        return len(self.joint_names)

    @property
    def num_bones(self) -> int:
        return len(self.bones)

    @property
    def root(self) -> int:
        return self.parent_index.index(-1)

    def index(self, name: str) -> int:
        return self.joint_names.index(name)

    def checksum(self) -> str:
        """Hash of the joint ordering; modules assert they agree on it."""
        return hashlib.sha256("\n".join(self.joint_names).encode()).hexdigest()


def build_topology() -> SkeletonTopology:
    """Return the canonical 16-joint topology (15 bones, 15 heatmap joints)."""
    names = JOINT_NAMES
    idx = {n: i for i, n in enumerate(names)}
    parent_of = {
        "head": "neck",
        "neck": None,
        "left_upper_arm": "neck",
        "left_lower_arm": "left_upper_arm",
        "left_hand": "left_lower_arm",
        "left_thigh": "neck",
        "left_calf": "left_thigh",
        "left_foot": "left_calf",
        "left_ball_of_foot": "left_foot",
        "right_upper_arm": "neck",
        "right_lower_arm": "right_upper_arm",
        "right_hand": "right_lower_arm",
        "right_thigh": "neck",
        "right_calf": "right_thigh",
        "right_foot": "right_calf",
        "right_ball_of_foot": "right_foot",
    }
    parent_index = tuple(
        -1 if parent_of[n] is None else idx[parent_of[n]] for n in names
    )
    heatmap_subset = tuple(i for i, n in enumerate(names) if n != "head")
    bones = tuple(
        (parent_index[j], j) for j in range(len(names)) if parent_index[j] >= 0
    )
    return SkeletonTopology(
        joint_names=names,
        parent_index=parent_index,
        heatmap_subset=heatmap_subset,
        bones=bones,
    )


TOPOLOGY_CHECKSUM = build_topology().checksum()


@dataclass(frozen=True)
class Pose3D:
    """16x3 joint positions in centimeters, tagged with their frame."""

    coords: np.ndarray
    frame: str

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=np.float64)
        if coords.shape != (NUM_JOINTS, 3):
            raise ValueError(f"pose must be {NUM_JOINTS}x3, got {coords.shape}")
        if not np.all(np.isfinite(coords)):
            raise ValueError("pose contains non-finite values")
        if self.frame not in POSE_FRAMES:
            raise ValueError(f"unknown pose frame {self.frame!r}")
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)

    def bone_vectors(self, topology: SkeletonTopology) -> np.ndarray:
        """Child-minus-parent vectors, one row per bone. Shape (15, 3)."""
        parents = np.array([b[0] for b in topology.bones])
        children = np.array([b[1] for b in topology.bones])
        return self.coords[children] - self.coords[parents]

    def bone_lengths(self, topology: SkeletonTopology) -> np.ndarray:
        return np.linalg.norm(self.bone_vectors(topology), axis=1)


@dataclass(frozen=True)
class Keypoints2D:
    """Pixel coordinates of the 15 heatmap joints in one view.

    Invisible joints carry no coordinate guarantee; their (u, v) entries
    are whatever the projection produced and must not be consumed.
    """

    coords: np.ndarray  # (15, 2) float pixels
    visible: np.ndarray  # (15,) bool

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=np.float64)
        visible = np.asarray(self.visible, dtype=bool)
        if coords.shape != (NUM_HEATMAP_JOINTS, 2):
            raise ValueError(f"keypoints must be {NUM_HEATMAP_JOINTS}x2")
        if visible.shape != (NUM_HEATMAP_JOINTS,):
            raise ValueError("visibility must have one flag per keypoint")
        coords.setflags(write=False)
        visible.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "visible", visible)


def validate_heatmap_stack(stack: np.ndarray, size: int = HEATMAP_SIZE) -> None:
    """Raise if `stack` is not a (15, size, size) array of finite values."""
    stack = np.asarray(stack)
    if stack.shape != (NUM_HEATMAP_JOINTS, size, size):
        raise ValueError(
            f"heatmap stack must be ({NUM_HEATMAP_JOINTS}, {size}, {size}),"
            f" got {stack.shape}"
        )
    if not np.all(np.isfinite(stack)):
        raise ValueError("heatmap stack contains non-finite values")
