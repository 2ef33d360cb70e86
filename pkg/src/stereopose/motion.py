"""Procedural motion clips and forward kinematics.

Characters are parametric stick figures: per-bone rest offsets sampled
within anthropometric ranges. A motion clip drives each joint with a
sinusoid per rotational axis (offset + amplitude * sin(2*pi*f*t + phase))
plus a root trajectory with linear velocity, turn rates, vertical sway
and an optional ballistic hop. Thirty category templates set the knobs.

Frames: the character frame has +X to the character's right, +Y facing
forward, +Z up, origin at the neck. The device (camera rig midpoint) is
welded to the head joint a few cm forward of the face, so it inherits
head motion. All lengths are centimeters, angles radians, time seconds.
"""

from dataclasses import dataclass, field

import numpy as np

from .geometry import apply_transform, euler_zyx, invert_rigid, rigid
from .skeleton import JOINT_NAMES, Pose3D, SkeletonTopology, build_topology

FPS = 25

# Rig midpoint in the head joint's frame: slightly forward and below the
# head center, roughly at the glasses.
GLASSES_OFFSET = np.array([0.0, 8.0, -2.0])

CATEGORIES = (
    "jumping",
    "falling_down",
    "exercising",
    "pulling",
    "singing",
    "rolling",
    "crawling",
    "laying",
    "sitting_on_the_ground",
    "crouching_normal",
    "crouching_turning",
    "crouching_to_standing",
    "crouching_forward",
    "crouching_backward",
    "crouching_sideways",
    "standing_whole_body",
    "standing_upper_body",
    "standing_turning",
    "standing_to_crouching",
    "standing_forward",
    "standing_backward",
    "standing_sideways",
    "dancing",
    "boxing",
    "wrestling",
    "soccer",
    "baseball",
    "basketball",
    "american_football",
    "golf",
)

# Per-axis angle bound (radians) by joint; offset + amplitude never exceeds it.
ANGLE_LIMITS = {
    "head": 1.0,
    "neck": 0.7,
    "left_upper_arm": 2.8,
    "left_lower_arm": 2.6,
    "left_hand": 0.9,
    "left_thigh": 2.2,
    "left_calf": 2.4,
    "left_foot": 0.9,
    "left_ball_of_foot": 0.6,
    "right_upper_arm": 2.8,
    "right_lower_arm": 2.6,
    "right_hand": 0.9,
    "right_thigh": 2.2,
    "right_calf": 2.4,
    "right_foot": 0.9,
    "right_ball_of_foot": 0.6,
}

_TOPOLOGY = build_topology()


@dataclass(frozen=True)
class CharacterProfile:
    """Rest-pose bone offsets plus the renderer's appearance knobs."""

    offsets: dict  # child joint name -> (3,) offset in the parent frame, cm
    head_radius: float
    limb_radius: float
    appearance_seed: int

    def bone_length(self, child: str) -> float:
        return float(np.linalg.norm(self.offsets[child]))

    def rest_pose(self) -> Pose3D:
        """Zero-angle pose, neck at the origin, character frame."""
        coords = np.zeros((len(JOINT_NAMES), 3))
        for name in _fk_order(_TOPOLOGY):
            p = _TOPOLOGY.parent_index[_TOPOLOGY.index(name)]
            if p < 0:
                continue
            coords[_TOPOLOGY.index(name)] = (
                coords[p] + self.offsets[name]
            )
        return Pose3D(coords=coords, frame="world")

    @property
    def standing_height(self) -> float:
        """Crown to sole in the rest pose."""
        coords = self.rest_pose().coords
        head_top = coords[_TOPOLOGY.index("head"), 2] + self.head_radius
        return float(head_top - coords[:, 2].min())

    @property
    def neck_height(self) -> float:
        """Neck height above the sole in the rest pose."""
        return float(-self.rest_pose().coords[:, 2].min())

    @property
    def lowest_z(self) -> float:
        """Lowest surface point in the character frame (capsule surface)."""
        return float(self.rest_pose().coords[:, 2].min() - self.limb_radius)


# Nominal segment sizes (cm) for a ~173 cm figure.
_NOMINAL = {
    "head_len": 22.0,
    "head_radius": 10.0,
    "shoulder_w": 17.0,
    "shoulder_drop": 3.0,
    "upper_arm": 28.0,
    "lower_arm": 25.0,
    "torso": 52.0,
    "hip_w": 9.0,
    "thigh": 42.0,
    "calf": 40.0,
    "ankle_h": 7.0,
    "ball_fwd": 16.0,
    "limb_radius": 4.5,
}


def sample_profile(rng: np.random.Generator) -> CharacterProfile:
    """Draw a character: global stature scale plus mild per-segment jitter.

    The scale and jitter ranges keep standing height inside [140, 200] cm.
    """
    scale = rng.uniform(0.85, 1.1)
    d = {k: v * scale * rng.uniform(0.96, 1.04) for k, v in _NOMINAL.items()}
    offsets = {
        "head": np.array([0.0, 0.0, d["head_len"]]),
        "left_upper_arm": np.array([-d["shoulder_w"], 0.0, -d["shoulder_drop"]]),
        "left_lower_arm": np.array([0.0, 0.0, -d["upper_arm"]]),
        "left_hand": np.array([0.0, 0.0, -d["lower_arm"]]),
        "left_thigh": np.array([-d["hip_w"], 0.0, -d["torso"]]),
        "left_calf": np.array([0.0, 0.0, -d["thigh"]]),
        "left_foot": np.array([0.0, 0.0, -d["calf"]]),
        "left_ball_of_foot": np.array([0.0, d["ball_fwd"], -d["ankle_h"]]),
    }
    for left, off in list(offsets.items()):
        if left.startswith("left_"):
            offsets[left.replace("left_", "right_")] = off * np.array(
                [-1.0, 1.0, 1.0]
            )
    profile = CharacterProfile(
        offsets={k: np.asarray(v, dtype=np.float64) for k, v in offsets.items()},
        head_radius=d["head_radius"],
        limb_radius=d["limb_radius"],
        appearance_seed=int(rng.integers(0, 2**31 - 1)),
    )
    if not 140.0 <= profile.standing_height <= 200.0:
        raise AssertionError(
            f"sampled height {profile.standing_height:.1f} out of range"
        )
    return profile


@dataclass(frozen=True)
class AngleTrack:
    """Per-axis sinusoid: angle(t) = offset + amplitude*sin(2*pi*freq*t + phase)."""

    offset: np.ndarray  # (3,) radians, axes (rx, ry, rz)
    amplitude: np.ndarray  # (3,) radians
    frequency: np.ndarray  # (3,) Hz
    phase: np.ndarray  # (3,) radians

    @classmethod
    def zero(cls) -> "AngleTrack":
        z = np.zeros(3)
        return cls(offset=z, amplitude=z.copy(), frequency=z.copy(), phase=z.copy())

    def angles(self, t: float) -> np.ndarray:
        return self.offset + self.amplitude * np.sin(
            2.0 * np.pi * self.frequency * t + self.phase
        )

    def bound(self) -> np.ndarray:
        return np.abs(self.offset) + np.abs(self.amplitude)


@dataclass(frozen=True)
class RootTrack:
    """Neck trajectory: linear motion, turn rates, sway, optional hop."""

    base: np.ndarray  # (3,) position at t = 0, world cm
    velocity: np.ndarray  # (3,) cm/s
    yaw0: float = 0.0
    yaw_rate: float = 0.0  # rad/s
    pitch0: float = 0.0
    pitch_rate: float = 0.0
    roll0: float = 0.0
    roll_rate: float = 0.0
    sway_amp: np.ndarray = field(default_factory=lambda: np.zeros(3))
    sway_freq: np.ndarray = field(default_factory=lambda: np.zeros(3))
    sway_phase: np.ndarray = field(default_factory=lambda: np.zeros(3))
    jump_height: float = 0.0  # cm; 0 disables the hop
    jump_period: float = 1.0  # s

    def pose_at(self, t: float) -> np.ndarray:
        """4x4 world-from-root transform at time t."""
        pos = self.base + self.velocity * t
        pos = pos + self.sway_amp * np.sin(
            2.0 * np.pi * self.sway_freq * t + self.sway_phase
        )
        if self.jump_height > 0.0:
            u = (t % self.jump_period) / self.jump_period
            pos = pos + np.array([0.0, 0.0, 4.0 * self.jump_height * u * (1 - u)])
        R = euler_zyx(
            self.yaw0 + self.yaw_rate * t,
            self.pitch0 + self.pitch_rate * t,
            self.roll0 + self.roll_rate * t,
        )
        return rigid(R, pos)


@dataclass(frozen=True)
class MotionClip:
    category: str
    duration: float  # seconds
    tracks: dict  # joint name -> AngleTrack (every joint present)
    root: RootTrack
    fps: int = FPS

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise ValueError(f"unknown motion category {self.category!r}")
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        missing = set(JOINT_NAMES) - set(self.tracks)
        if missing:
            raise ValueError(f"tracks missing joints: {sorted(missing)}")
        for name, track in self.tracks.items():
            if np.any(track.bound() > ANGLE_LIMITS[name] + 1e-12):
                raise ValueError(f"angle track for {name} exceeds joint limit")

    @property
    def frame_count(self) -> int:
        return int(round(self.duration * self.fps))

    @classmethod
    def constant(
        cls, category: str, duration: float, offsets: dict | None = None
    ) -> "MotionClip":
        """Zero-motion clip; `offsets` optionally poses individual joints."""
        tracks = {name: AngleTrack.zero() for name in JOINT_NAMES}
        for name, off in (offsets or {}).items():
            tracks[name] = AngleTrack(
                offset=np.asarray(off, dtype=np.float64),
                amplitude=np.zeros(3),
                frequency=np.zeros(3),
                phase=np.zeros(3),
            )
        root = RootTrack(base=np.zeros(3), velocity=np.zeros(3))
        return cls(category=category, duration=duration, tracks=tracks, root=root)


def _fk_order(topology: SkeletonTopology) -> list[str]:
    """Joint names root-first so parents precede children."""
    children: dict[int, list[int]] = {}
    for j, p in enumerate(topology.parent_index):
        children.setdefault(p, []).append(j)
    order, queue = [], [topology.root]
    while queue:
        j = queue.pop(0)
        order.append(topology.joint_names[j])
        queue.extend(children.get(j, []))
    return order


def fk_transforms(
    clip: MotionClip, frame_idx: int, profile: CharacterProfile
) -> dict:
    """World-from-joint 4x4 transforms for one frame, keyed by joint name."""
    if not 0 <= frame_idx < clip.frame_count:
        raise IndexError(
            f"frame {frame_idx} outside clip of {clip.frame_count} frames"
        )
    t = frame_idx / clip.fps
    topo = _TOPOLOGY
    out: dict[str, np.ndarray] = {}
    for name in _fk_order(topo):
        j = topo.index(name)
        p = topo.parent_index[j]
        angles = clip.tracks[name].angles(t)
        local = rigid(
            euler_zyx(angles[2], angles[1], angles[0]),
            np.zeros(3) if p < 0 else profile.offsets[name],
        )
        parent = clip.root.pose_at(t) if p < 0 else out[topo.joint_names[p]]
        out[name] = parent @ local
    return out


def fk_pose(
    clip: MotionClip, frame_idx: int, profile: CharacterProfile
) -> Pose3D:
    """World-frame joint positions for one frame."""
    transforms = fk_transforms(clip, frame_idx, profile)
    coords = np.stack([transforms[name][:3, 3] for name in JOINT_NAMES])
    return Pose3D(coords=coords, frame="world")


def world_from_device(
    clip: MotionClip, frame_idx: int, profile: CharacterProfile
) -> np.ndarray:
    """4x4 pose of the head-mounted rig midpoint, welded to the head joint."""
    head = fk_transforms(clip, frame_idx, profile)["head"]
    return head @ rigid(np.eye(3), GLASSES_OFFSET)


def device_pose(
    clip: MotionClip, frame_idx: int, profile: CharacterProfile
) -> tuple[Pose3D, np.ndarray]:
    """Pose expressed in the device frame, plus the world-from-device transform."""
    world = fk_pose(clip, frame_idx, profile)
    T = world_from_device(clip, frame_idx, profile)
    coords = apply_transform(invert_rigid(T), world.coords)
    return Pose3D(coords=coords, frame="device"), T


def _limb_tracks(
    rng: np.random.Generator,
    arm_amp: float,
    arm_freq: float,
    leg_amp: float,
    leg_freq: float,
    head_amp: float = 0.1,
    arm_axis: int = 0,
    leg_axis: int = 0,
    antiphase: bool = True,
    arm_offset_x: float = 0.0,
) -> dict:
    """Sinusoid tracks for all joints from a handful of activity knobs.

    Distal joints move at reduced amplitude; left/right pairs run in
    antiphase when requested (walking-style alternation).
    """

    def jitter(x):
        return x * rng.uniform(0.85, 1.15)

    def track(amp, freq, axis, phase, offset=None):
        a = np.zeros(3)
        a[axis] = jitter(amp)
        f = np.full(3, jitter(max(freq, 1e-3)))
        ph = rng.uniform(0, 2 * np.pi, size=3)
        ph[axis] = phase
        off = np.zeros(3) if offset is None else np.asarray(offset, dtype=float)
        return AngleTrack(offset=off, amplitude=a, frequency=f, phase=ph)

    tracks = {name: AngleTrack.zero() for name in JOINT_NAMES}
    flip = np.pi if antiphase else 0.0
    for side, side_phase in (("left", 0.0), ("right", flip)):
        tracks[f"{side}_upper_arm"] = track(
            arm_amp, arm_freq, arm_axis, side_phase,
            offset=[arm_offset_x, 0.0, 0.0],
        )
        tracks[f"{side}_lower_arm"] = track(
            arm_amp * 0.6, arm_freq, arm_axis, side_phase + rng.uniform(-0.4, 0.4)
        )
        tracks[f"{side}_hand"] = track(arm_amp * 0.2, arm_freq, arm_axis, side_phase)
        tracks[f"{side}_thigh"] = track(leg_amp, leg_freq, leg_axis, side_phase)
        tracks[f"{side}_calf"] = track(
            leg_amp * 0.7, leg_freq, leg_axis, side_phase + rng.uniform(-0.4, 0.4)
        )
        tracks[f"{side}_foot"] = track(leg_amp * 0.3, leg_freq, leg_axis, side_phase)
        tracks[f"{side}_ball_of_foot"] = track(
            min(leg_amp * 0.15, 0.5), leg_freq, leg_axis, side_phase
        )
    tracks["head"] = track(head_amp, jitter(0.3), 2, rng.uniform(0, 2 * np.pi))
    tracks["neck"] = track(min(head_amp, 0.3), jitter(0.25), 0, rng.uniform(0, 2 * np.pi))
    return tracks


def _add_offsets(tracks: dict, offsets: dict) -> dict:
    out = dict(tracks)
    for name, off in offsets.items():
        t = out[name]
        out[name] = AngleTrack(
            offset=t.offset + np.asarray(off, dtype=float),
            amplitude=t.amplitude,
            frequency=t.frequency,
            phase=t.phase,
        )
    return out


def _clamp_tracks(tracks: dict) -> dict:
    """Shrink amplitudes so offset + amplitude respects each joint limit."""
    out = {}
    for name, t in tracks.items():
        limit = ANGLE_LIMITS[name]
        offset = np.clip(t.offset, -limit, limit)
        amplitude = np.minimum(np.abs(t.amplitude), limit - np.abs(offset))
        out[name] = AngleTrack(
            offset=offset,
            amplitude=amplitude,
            frequency=t.frequency,
            phase=t.phase,
        )
    return out


# Baseline joint offsets per posture (radians; renderer-plausible, not mocap).
_CROUCH_OFFSETS = {
    "left_thigh": [-1.0, 0, 0],
    "right_thigh": [-1.0, 0, 0],
    "left_calf": [1.9, 0, 0],
    "right_calf": [1.9, 0, 0],
    "neck": [0.35, 0, 0],
}
_SIT_OFFSETS = {
    "left_thigh": [-1.5, 0, 0],
    "right_thigh": [-1.5, 0, 0],
    "left_calf": [0.3, 0, 0],
    "right_calf": [0.3, 0, 0],
}
_TUCK_OFFSETS = {
    "left_thigh": [-1.3, 0, 0],
    "right_thigh": [-1.3, 0, 0],
    "left_calf": [2.0, 0, 0],
    "right_calf": [2.0, 0, 0],
    "left_upper_arm": [-1.0, 0, 0],
    "right_upper_arm": [-1.0, 0, 0],
    "left_lower_arm": [1.8, 0, 0],
    "right_lower_arm": [1.8, 0, 0],
}
_CRAWL_OFFSETS = {
    "left_thigh": [-1.6, 0, 0],
    "right_thigh": [-1.6, 0, 0],
    "left_calf": [1.6, 0, 0],
    "right_calf": [1.6, 0, 0],
    "left_upper_arm": [-1.3, 0, 0],
    "right_upper_arm": [-1.3, 0, 0],
}


def generate_motion(
    category: str,
    duration: float,
    profile: CharacterProfile,
    rng: np.random.Generator,
) -> MotionClip:
    """Build a clip whose qualitative shape matches the category template."""
    if category not in CATEGORIES:
        raise ValueError(f"unknown motion category {category!r}")
    if duration <= 0:
        raise ValueError("duration must be positive")

    stand_z = profile.neck_height
    crouch_drop = 0.32 * stand_z
    tracks = None
    offsets: dict = {}
    base = np.array([0.0, 0.0, stand_z])
    velocity = np.zeros(3)
    kw: dict = {}  # extra RootTrack fields

    def bob(amp, freq):
        kw["sway_amp"] = np.array([0.0, 0.0, amp])
        kw["sway_freq"] = np.full(3, freq)
        kw["sway_phase"] = rng.uniform(0, 2 * np.pi, size=3)

    def turn(lo_deg, hi_deg):
        total = np.deg2rad(rng.uniform(lo_deg, hi_deg)) * rng.choice([-1.0, 1.0])
        kw["yaw_rate"] = total / duration

    if category == "jumping":
        tracks = _limb_tracks(rng, 0.5, 1.0, 0.4, 1.0, antiphase=False)
        period = rng.uniform(0.9, 1.3)
        kw["jump_height"] = rng.uniform(20.0, 40.0)
        kw["jump_period"] = period
    elif category == "falling_down":
        tracks = _limb_tracks(rng, 0.6, 1.5, 0.5, 1.5)
        velocity[2] = -(stand_z - 0.15 * stand_z) / duration
        kw["pitch_rate"] = rng.uniform(0.6, 1.4) / duration * rng.choice([-1, 1])
    elif category == "exercising":
        tracks = _limb_tracks(rng, 1.2, 0.8, 0.5, 0.8, antiphase=False)
        bob(3.0, 0.8)
    elif category == "pulling":
        tracks = _limb_tracks(
            rng, 0.7, 0.8, 0.1, 0.8, antiphase=False, arm_offset_x=-0.9
        )
        velocity[1] = -2.0
    elif category == "singing":
        tracks = _limb_tracks(rng, 0.5, 0.4, 0.05, 0.4, head_amp=0.25, antiphase=False)
    elif category == "rolling":
        tracks = _limb_tracks(rng, 0.2, 0.6, 0.2, 0.6)
        offsets = _TUCK_OFFSETS
        base[2] = 0.14 * stand_z
        kw["pitch0"] = np.pi / 2
        kw["roll_rate"] = 2 * np.pi / duration * rng.choice([-1.0, 1.0])
    elif category == "crawling":
        tracks = _limb_tracks(rng, 0.5, 1.0, 0.5, 1.0)
        offsets = _CRAWL_OFFSETS
        base[2] = 0.42 * stand_z
        kw["pitch0"] = 1.25
        velocity[1] = rng.uniform(10.0, 20.0)
    elif category == "laying":
        tracks = _limb_tracks(rng, 0.1, 0.25, 0.08, 0.25, antiphase=False)
        base[2] = 0.12 * stand_z
        kw["pitch0"] = np.pi / 2
    elif category == "sitting_on_the_ground":
        tracks = _limb_tracks(rng, 0.4, 0.4, 0.05, 0.4, antiphase=False)
        offsets = _SIT_OFFSETS
        base[2] = profile.bone_length("left_thigh") * 0.2 + abs(
            profile.offsets["left_thigh"][2]
        )
    elif category.startswith("crouching"):
        tracks = _limb_tracks(rng, 0.4, 0.7, 0.15, 0.7)
        offsets = _CROUCH_OFFSETS
        base[2] = stand_z - crouch_drop
        if category == "crouching_turning":
            turn(90.0, 270.0)
        elif category == "crouching_to_standing":
            velocity[2] = crouch_drop / duration
        elif category == "crouching_forward":
            velocity[1] = rng.uniform(10.0, 18.0)
        elif category == "crouching_backward":
            velocity[1] = -rng.uniform(8.0, 14.0)
        elif category == "crouching_sideways":
            velocity[0] = rng.uniform(8.0, 14.0) * rng.choice([-1.0, 1.0])
    elif category == "standing_whole_body":
        tracks = _limb_tracks(rng, 0.6, 0.6, 0.3, 0.6)
        bob(2.0, 0.6)
    elif category == "standing_upper_body":
        tracks = _limb_tracks(rng, 0.8, 0.7, 0.05, 0.7, head_amp=0.3)
    elif category == "standing_turning":
        tracks = _limb_tracks(rng, 0.3, 0.6, 0.2, 0.6)
        turn(95.0, 360.0)
    elif category == "standing_to_crouching":
        tracks = _limb_tracks(rng, 0.4, 0.6, 0.2, 0.6)
        velocity[2] = -crouch_drop / duration
    elif category in ("standing_forward", "standing_backward", "standing_sideways"):
        step = rng.uniform(0.8, 1.2)
        axis = 1 if category == "standing_sideways" else 0
        tracks = _limb_tracks(rng, 0.45, step, 0.6, step, leg_axis=axis)
        speed = rng.uniform(25.0, 50.0)
        if category == "standing_forward":
            velocity[1] = speed
        elif category == "standing_backward":
            velocity[1] = -0.7 * speed
        else:
            velocity[0] = 0.7 * speed * rng.choice([-1.0, 1.0])
        bob(2.0, 2 * step)
    elif category == "dancing":
        tracks = _limb_tracks(rng, 1.0, 1.2, 0.5, 1.2, head_amp=0.4)
        kw["sway_amp"] = np.array([8.0, 8.0, 4.0])
        kw["sway_freq"] = rng.uniform(0.4, 1.2, size=3)
        kw["sway_phase"] = rng.uniform(0, 2 * np.pi, size=3)
    elif category == "boxing":
        tracks = _limb_tracks(rng, 1.1, 1.6, 0.2, 1.6, arm_offset_x=-0.6)
        bob(2.5, 2.2)
    elif category == "wrestling":
        tracks = _limb_tracks(rng, 0.7, 0.9, 0.3, 0.9, arm_offset_x=-0.8)
        base[2] = stand_z - 0.15 * stand_z
        velocity[1] = rng.uniform(-6.0, 6.0)
    elif category == "soccer":
        tracks = _limb_tracks(rng, 0.5, 0.7, 1.1, 0.7)
        velocity[1] = rng.uniform(10.0, 30.0)
    elif category == "baseball":
        tracks = _limb_tracks(
            rng, 1.3, 0.4, 0.1, 0.4, antiphase=False, head_amp=0.2
        )
        offsets = {"neck": [0, 0, 0.4 * rng.choice([-1.0, 1.0])]}
    elif category == "basketball":
        tracks = _limb_tracks(rng, 1.0, 2.0, 0.3, 2.0, antiphase=True)
        base[2] = stand_z - 0.1 * stand_z
        velocity[1] = rng.uniform(5.0, 15.0)
        bob(3.0, 2.0)
    elif category == "american_football":
        tracks = _limb_tracks(rng, 0.3, 1.1, 0.7, 1.1, arm_offset_x=-0.8)
        base[2] = stand_z - 0.12 * stand_z
        velocity[1] = rng.uniform(35.0, 60.0)
    elif category == "golf":
        tracks = _limb_tracks(
            rng, 1.4, 0.3, 0.05, 0.3, antiphase=False, head_amp=0.05
        )
        offsets = {"neck": [0.25, 0, 0]}

    tracks = _clamp_tracks(_add_offsets(tracks, offsets))
    root = RootTrack(base=base, velocity=velocity, yaw0=rng.uniform(0, 2 * np.pi), **kw)
    return MotionClip(category=category, duration=duration, tracks=tracks, root=root)
