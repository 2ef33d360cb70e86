"""Stereo fisheye rig: equidistant projection and heatmap rendering.

Conventions. Device frame: origin at the midpoint between the two
cameras, +X toward the right camera, +Y the wearer's facing direction,
+Z up. Camera frame: OpenCV-style, +Z along the optical axis, +X right,
+Y down in the image. Both cameras share intrinsics and are pitched
downward by a configurable angle so the body falls inside the view.

The projection is equidistant: image radius r = f * theta, with f chosen
so theta = fov/2 lands on the inscribed image circle. Continuous pixel
coordinates put (0, 0) at the corner of pixel [0, 0], so the center of
heatmap cell (row, col) is (col + 0.5, row + 0.5).
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .geometry import apply_transform, invert_rigid, rigid
from .skeleton import (
    HEATMAP_SIZE,
    NUM_HEATMAP_JOINTS,
    Keypoints2D,
    Pose3D,
    SkeletonTopology,
)

LEFT, RIGHT = "left", "right"
DECODE_VISIBILITY_THRESHOLD = 0.1


@dataclass(frozen=True)
class FisheyeIntrinsics:
    image_size: int  # square, pixels
    fov: float  # radians

    def __post_init__(self):
        if not 0 < self.fov < np.pi:
            raise ValueError("fov must be in (0, pi)")
        if self.image_size <= 0:
            raise ValueError("image_size must be positive")

    @property
    def f(self) -> float:
        """Pixels per radian; fov/2 maps to the inscribed circle radius."""
        return (self.image_size / 2.0) / (self.fov / 2.0)

    @property
    def center(self) -> tuple[float, float]:
        return (self.image_size / 2.0, self.image_size / 2.0)


def project(point_cam, intr: FisheyeIntrinsics) -> tuple[float, float, bool]:
    """Project one camera-frame point (cm) to (u, v, visible)."""
    p = np.asarray(point_cam, dtype=np.float64)
    norm = np.linalg.norm(p)
    if norm == 0.0:
        raise ValueError("cannot project a zero-length point")
    radial = np.hypot(p[0], p[1])
    theta = np.arctan2(radial, p[2])
    r = intr.f * theta
    cx, cy = intr.center
    if radial == 0.0:
        u, v = cx, cy
    else:
        u = cx + r * p[0] / radial
        v = cy + r * p[1] / radial
    visible = bool(theta <= intr.fov / 2.0)
    return float(u), float(v), visible


@dataclass(frozen=True)
class StereoRig:
    """Two fisheye cameras on the device, `baseline_cm` apart along +X."""

    baseline_cm: float
    intrinsics: FisheyeIntrinsics
    pitch: float = np.deg2rad(30.0)  # downward camera pitch, radians

    def __post_init__(self):
        if self.baseline_cm <= 0:
            raise ValueError("baseline must be positive")

    def camera_from_device_rotation(self) -> np.ndarray:
        """Columns of the inverse: camera axes expressed in device coords."""
        p = self.pitch
        # optical axis: forward pitched down; image-right = device +X
        z_c = np.array([0.0, np.cos(p), -np.sin(p)])
        x_c = np.array([1.0, 0.0, 0.0])
        y_c = np.cross(z_c, x_c)
        return np.stack([x_c, y_c, z_c], axis=1)  # R_device_from_cam

    def device_from_camera(self, side: str) -> np.ndarray:
        """4x4 transform placing the camera in the device frame."""
        offset = -self.baseline_cm / 2.0 if side == LEFT else self.baseline_cm / 2.0
        if side not in (LEFT, RIGHT):
            raise ValueError(f"side must be {LEFT!r} or {RIGHT!r}")
        return rigid(self.camera_from_device_rotation(), [offset, 0.0, 0.0])

    def camera_centers(self) -> np.ndarray:
        return np.stack(
            [self.device_from_camera(s)[:3, 3] for s in (LEFT, RIGHT)]
        )


def project_pose(
    pose: Pose3D, rig: StereoRig, topology: SkeletonTopology
) -> tuple[Keypoints2D, Keypoints2D]:
    """Project the heatmap-subset joints of a device-frame pose into both views.

    Per-joint projection failures (a joint exactly at a camera center)
    mark that joint invisible instead of aborting the frame.
    """
    if pose.frame != "device":
        raise ValueError(f"pose must be in device frame, got {pose.frame!r}")
    views = []
    for side in (LEFT, RIGHT):
        T = invert_rigid(rig.device_from_camera(side))
        coords = np.zeros((NUM_HEATMAP_JOINTS, 2))
        visible = np.zeros(NUM_HEATMAP_JOINTS, dtype=bool)
        for k, j in enumerate(topology.heatmap_subset):
            p_cam = apply_transform(T, pose.coords[j])
            try:
                u, v, vis = project(p_cam, rig.intrinsics)
            except ValueError:
                continue
            coords[k] = (u, v)
            visible[k] = vis
        views.append(Keypoints2D(coords=coords, visible=visible))
    return views[0], views[1]


def render_heatmaps(
    kps: Keypoints2D,
    input_size: int,
    size: int = HEATMAP_SIZE,
    sigma: float = 2.0,
) -> np.ndarray:
    """Render ground-truth heatmaps, one unnormalized Gaussian per visible joint.

    Keypoints come in full-resolution pixels and are rescaled onto the
    size x size grid; each visible channel peaks at 1 at the keypoint,
    invisible channels are all zero.
    """
    scale = size / input_size
    cell = np.arange(size) + 0.5
    gy, gx = np.meshgrid(cell, cell, indexing="ij")
    stack = np.zeros((NUM_HEATMAP_JOINTS, size, size), dtype=np.float32)
    for k in range(NUM_HEATMAP_JOINTS):
        if not kps.visible[k]:
            continue
        kx, ky = kps.coords[k] * scale
        d2 = (gx - kx) ** 2 + (gy - ky) ** 2
        stack[k] = np.exp(-d2 / (2.0 * sigma**2))
    return stack


def decode_heatmaps(
    stack: np.ndarray,
    input_size: int,
    threshold: float = DECODE_VISIBILITY_THRESHOLD,
) -> Keypoints2D:
    """Argmax-decode a heatmap stack back to full-resolution keypoints.

    Ties break to the lowest linear index; a channel whose peak is at or
    below `threshold` decodes as invisible.
    """
    stack = np.asarray(stack)
    n, size, _ = stack.shape
    scale = input_size / size
    coords = np.zeros((n, 2))
    visible = np.zeros(n, dtype=bool)
    for k in range(n):
        flat = np.argmax(stack[k])
        row, col = divmod(int(flat), size)
        coords[k] = ((col + 0.5) * scale, (row + 0.5) * scale)
        visible[k] = stack[k, row, col] > threshold
    return Keypoints2D(coords=coords, visible=visible)


@dataclass(frozen=True)
class RigConfig:
    """Everything needed to rebuild the rig and its heatmap recipe."""

    baseline_cm: float = 12.0
    fov_deg: float = 170.0
    image_size: int = 256
    sigma: float = 2.0
    pitch_deg: float = 30.0

    def rig(self) -> StereoRig:
        return StereoRig(
            baseline_cm=self.baseline_cm,
            intrinsics=FisheyeIntrinsics(
                image_size=self.image_size, fov=np.deg2rad(self.fov_deg)
            ),
            pitch=np.deg2rad(self.pitch_deg),
        )

    def to_dict(self) -> dict:
        return {
            "baseline_cm": self.baseline_cm,
            "fov_deg": self.fov_deg,
            "image_size": self.image_size,
            "sigma": self.sigma,
            "pitch_deg": self.pitch_deg,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RigConfig":
        return cls(**d)

    def save(self, path) -> None:
        Path(path).write_text(yaml.safe_dump(self.to_dict(), sort_keys=True))

    @classmethod
    def load(cls, path) -> "RigConfig":
        return cls.from_dict(yaml.safe_load(Path(path).read_text()))
