"""Stereo egocentric pose pipeline: synthesis, networks, metrics, CLI.

Heavy submodules (networks, training, reporting) are imported on
demand; the package root exposes only the light geometric core.
"""

__version__ = "0.1.0"

from .camera import FisheyeIntrinsics, RigConfig, StereoRig
from .skeleton import (
    HEATMAP_SIZE,
    JOINT_NAMES,
    NUM_HEATMAP_JOINTS,
    NUM_JOINTS,
    Keypoints2D,
    Pose3D,
    SkeletonTopology,
    build_topology,
)

__all__ = [
    "__version__",
    "FisheyeIntrinsics",
    "RigConfig",
    "StereoRig",
    "HEATMAP_SIZE",
    "JOINT_NAMES",
    "NUM_HEATMAP_JOINTS",
    "NUM_JOINTS",
    "Keypoints2D",
    "Pose3D",
    "SkeletonTopology",
    "build_topology",
]
