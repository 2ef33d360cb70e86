"""Minimal stereo renderer: anti-aliased limb capsules over noise.

Each bone is drawn by sampling points along its 3D segment, projecting
every sample through the fisheye model and splatting a disk whose radius
matches the limb's angular size at that depth. The head gets one larger
disk. Bones are painted far-to-near so nearer limbs overwrite farther
ones, which approximates self-occlusion well enough for learning.
"""

import numpy as np

from .camera import LEFT, RIGHT, StereoRig, project, project_pose
from .geometry import apply_transform, invert_rigid
from .motion import CharacterProfile
from .records import FrameRecord
from .skeleton import Pose3D, build_topology

_TOPOLOGY = build_topology()

BACKGROUND_LEVELS = (0.35, 0.65)  # uniform noise range, fraction of full scale


def limb_colors(appearance_seed: int, n: int) -> np.ndarray:
    """(n, 3) RGB in [0.25, 0.95], deterministic per character."""
    rng = np.random.default_rng(appearance_seed)
    return rng.uniform(0.25, 0.95, size=(n, 3))


def _splat_disk(img, cx: float, cy: float, radius: float, color) -> None:
    """Alpha-composite one anti-aliased disk; touches only its bounding box."""
    size = img.shape[0]
    r = max(radius, 0.75)
    x0 = max(int(np.floor(cx - r - 1)), 0)
    x1 = min(int(np.ceil(cx + r + 1)) + 1, size)
    y0 = max(int(np.floor(cy - r - 1)), 0)
    y1 = min(int(np.ceil(cy + r + 1)) + 1, size)
    if x0 >= x1 or y0 >= y1:
        return
    ys, xs = np.mgrid[y0:y1, x0:x1]
    d = np.hypot(xs + 0.5 - cx, ys + 0.5 - cy)
    alpha = np.clip(r + 0.5 - d, 0.0, 1.0)[..., None]
    img[y0:y1, x0:x1] = (1.0 - alpha) * img[y0:y1, x0:x1] + alpha * color


def _draw_segment(img, a_cam, b_cam, radius_cm: float, color, intr) -> None:
    """Splat disks along a camera-frame 3D segment."""
    a = np.asarray(a_cam, dtype=np.float64)
    b = np.asarray(b_cam, dtype=np.float64)
    try:
        ua, va, _ = project(a, intr)
        ub, vb, _ = project(b, intr)
    except ValueError:  # endpoint at the camera center
        return
    n_samples = int(np.clip(np.hypot(ub - ua, vb - va) / 1.5, 2, 96))
    for s in np.linspace(0.0, 1.0, n_samples):
        p = a + s * (b - a)
        dist = np.linalg.norm(p)
        if dist < 1e-6:
            continue
        u, v, visible = project(p, intr)
        if not visible:
            continue
        r_px = intr.f * np.arctan(radius_cm / dist)
        _splat_disk(img, u, v, r_px, color)


def render_view(
    pose: Pose3D,
    rig: StereoRig,
    profile: CharacterProfile,
    side: str,
    noise_seed: int,
) -> np.ndarray:
    """One view as float32 (size, size, 3) in [0, 1]."""
    intr = rig.intrinsics
    size = intr.image_size
    rng = np.random.default_rng(noise_seed)
    img = rng.uniform(*BACKGROUND_LEVELS, size=(size, size, 3)).astype(np.float64)

    cam_from_device = invert_rigid(rig.device_from_camera(side))
    joints_cam = apply_transform(cam_from_device, pose.coords)
    colors = limb_colors(profile.appearance_seed, _TOPOLOGY.num_bones + 1)

    # elements: 15 bone capsules plus one head disk, painted far to near
    head = _TOPOLOGY.index("head")
    elements = []  # (mean depth, draw thunk)
    for b, (p, c) in enumerate(_TOPOLOGY.bones):
        depth = 0.5 * (
            np.linalg.norm(joints_cam[p]) + np.linalg.norm(joints_cam[c])
        )
        elements.append(
            (
                depth,
                lambda p=p, c=c, b=b: _draw_segment(
                    img, joints_cam[p], joints_cam[c],
                    profile.limb_radius, colors[b], intr,
                ),
            )
        )
    head_dist = np.linalg.norm(joints_cam[head])
    if head_dist > 1e-6:
        elements.append(
            (
                head_dist,
                lambda: _draw_segment(
                    img, joints_cam[head], joints_cam[head],
                    profile.head_radius, colors[-1], intr,
                ),
            )
        )
    for _, draw in sorted(elements, key=lambda e: -e[0]):
        draw()
    return img.astype(np.float32)


def to_uint8(img: np.ndarray) -> np.ndarray:
    return np.clip(np.round(img * 255.0), 0, 255).astype(np.uint8)


def render_frame(
    pose: Pose3D,
    rig: StereoRig,
    profile: CharacterProfile,
    world_from_device: np.ndarray | None = None,
    noise_seed: int = 0,
    frame_id: str = "frame_0",
    motion_category: str = "standing_whole_body",
    left_image: str = "",
    right_image: str = "",
) -> tuple[np.ndarray, np.ndarray, FrameRecord]:
    """Render both views of a device-frame pose and assemble its record."""
    if pose.frame != "device":
        raise ValueError("render_frame expects a device-frame pose")
    T = np.eye(4) if world_from_device is None else np.asarray(world_from_device)
    kps_l, kps_r = project_pose(pose, rig, _TOPOLOGY)
    img_l = render_view(pose, rig, profile, LEFT, noise_seed)
    img_r = render_view(pose, rig, profile, RIGHT, noise_seed + 1)
    record = FrameRecord(
        frame_id=frame_id,
        left_image=left_image,
        right_image=right_image,
        camera_pose_left=T @ rig.device_from_camera(LEFT),
        camera_pose_right=T @ rig.device_from_camera(RIGHT),
        joints_world=apply_transform(T, pose.coords),
        joints_device=np.asarray(pose.coords),
        keypoints_left=kps_l,
        keypoints_right=kps_r,
        motion_category=motion_category,
    )
    return to_uint8(img_l), to_uint8(img_r), record
