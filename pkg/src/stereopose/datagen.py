"""Dataset generation: motions to rendered frames to split manifests.

Layout under the output root:

    <split>/<motion_id>/frame_<k>.left.png
    <split>/<motion_id>/frame_<k>.right.png
    <split>/<motion_id>/frame_<k>.meta
    manifest.<split>
    dataset.lock

Splits are assigned per motion, never per frame. Every random choice
flows from one seeded generator in a fixed order, so a rerun with the
same config writes byte-identical manifests and metadata.
"""

from dataclasses import dataclass, field
import hashlib
import json
from pathlib import Path

import numpy as np
from PIL import Image
import yaml

from .camera import RigConfig
from .motion import (
    CATEGORIES,
    device_pose,
    generate_motion,
    sample_profile,
)
from .records import DatasetManifest, MotionEntry, manifest_path, save_record
from .render import render_frame
from .skeleton import build_topology

SPLITS = ("train", "val", "test")

_TOPOLOGY = build_topology()


@dataclass(frozen=True)
class GenConfig:
    n_motions: int = 30
    categories: tuple = CATEGORIES
    split_ratios: tuple = (0.8, 0.1, 0.1)
    duration_range: tuple = (1.2, 2.4)  # seconds, sampled per motion
    n_characters: int = 17
    seed: int = 0
    rig: RigConfig = field(default_factory=RigConfig)

    def __post_init__(self):
        if self.n_motions < 1:
            raise ValueError("need at least one motion")
        if len(self.split_ratios) != len(SPLITS):
            raise ValueError(f"need {len(SPLITS)} split ratios")
        if any(r < 0 for r in self.split_ratios):
            raise ValueError("split ratios must be non-negative")
        if abs(sum(self.split_ratios) - 1.0) > 1e-9:
            raise ValueError("split ratios must sum to 1")
        unknown = set(self.categories) - set(CATEGORIES)
        if unknown or not self.categories:
            raise ValueError(f"unknown categories: {sorted(unknown)}")

    def to_dict(self) -> dict:
        return {
            "n_motions": self.n_motions,
            "categories": list(self.categories),
            "split_ratios": list(self.split_ratios),
            "duration_range": list(self.duration_range),
            "n_characters": self.n_characters,
            "seed": self.seed,
            "rig": self.rig.to_dict(),
        }

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    @classmethod
    def from_dict(cls, d: dict) -> "GenConfig":
        d = dict(d)
        for key in ("categories", "split_ratios", "duration_range"):
            if key in d:
                d[key] = tuple(d[key])
        if "rig" in d:
            d["rig"] = RigConfig.from_dict(d["rig"])
        return cls(**d)

    @classmethod
    def load(cls, path) -> "GenConfig":
        data = yaml.safe_load(Path(path).read_text())
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ValueError(f"config must be a mapping, got {type(data).__name__}")
        return cls.from_dict(data)


def split_sizes(n: int, ratios) -> list[int]:
    """Integer split sizes summing to n, largest fractional remainder first."""
    raw = [r * n for r in ratios]
    sizes = [int(np.floor(x)) for x in raw]
    fracs = sorted(
        range(len(ratios)), key=lambda k: (-(raw[k] - sizes[k]), k)
    )
    for k in fracs[: n - sum(sizes)]:
        sizes[k] += 1
    return sizes


def assign_splits(n: int, ratios, rng: np.random.Generator) -> list[str]:
    """Per-motion split names; motion-level shuffle, exact ratio counts."""
    order = rng.permutation(n)
    sizes = split_sizes(n, ratios)
    names = [None] * n
    start = 0
    for split, size in zip(SPLITS, sizes):
        for idx in order[start : start + size]:
            names[idx] = split
        start += size
    return names


def _noise_seed(seed: int, motion_idx: int, frame_idx: int) -> int:
    return (seed * 1_000_003 + motion_idx * 8191 + frame_idx * 2) & 0x7FFFFFFF


def build_dataset(out_dir, config: GenConfig) -> dict:
    """Generate, render and write the dataset; returns manifests by split."""
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(config.seed)
    rig = config.rig.rig()

    profiles = [sample_profile(rng) for _ in range(config.n_characters)]
    plans = []
    for i in range(config.n_motions):
        category = config.categories[i % len(config.categories)]
        plans.append(
            {
                "index": i,
                "category": category,
                "motion_id": f"{category}_{i:05d}",
                "char": int(rng.integers(config.n_characters)),
                "duration": float(rng.uniform(*config.duration_range)),
            }
        )
    split_names = assign_splits(config.n_motions, config.split_ratios, rng)

    manifests = {split: DatasetManifest(split=split, motions=[]) for split in SPLITS}
    for plan in plans:
        split = split_names[plan["index"]]
        profile = profiles[plan["char"]]
        clip = generate_motion(plan["category"], plan["duration"], profile, rng)
        motion_dir = root / split / plan["motion_id"]
        motion_dir.mkdir(parents=True, exist_ok=True)
        frame_refs = []
        for k in range(clip.frame_count):
            pose_dev, world_from_dev = device_pose(clip, k, profile)
            rel = f"{split}/{plan['motion_id']}/frame_{k}"
            img_l, img_r, record = render_frame(
                pose_dev,
                rig,
                profile,
                world_from_device=world_from_dev,
                noise_seed=_noise_seed(config.seed, plan["index"], k),
                frame_id=f"{plan['motion_id']}:{k}",
                motion_category=plan["category"],
                left_image=f"{rel}.left.png",
                right_image=f"{rel}.right.png",
            )
            Image.fromarray(img_l).save(root / f"{rel}.left.png")
            Image.fromarray(img_r).save(root / f"{rel}.right.png")
            save_record(root / f"{rel}.meta", record)
            frame_refs.append(f"{rel}.meta")
        manifests[split].motions.append(
            MotionEntry(
                motion_id=plan["motion_id"],
                category=plan["category"],
                character_id=f"char_{plan['char']:03d}",
                frame_count=clip.frame_count,
                frames=frame_refs,
            )
        )
    for split, manifest in manifests.items():
        manifest.save(manifest_path(root, split))
    lock = {
        "config": config.to_dict(),
        "config_hash": config.config_hash(),
        "frames": sum(m.frame_count for m in manifests.values()),
    }
    (root / "dataset.lock").write_text(
        json.dumps(lock, sort_keys=True, separators=(",", ":"))
    )
    return manifests


def load_manifests(root, splits=SPLITS, check_files: bool = False) -> dict:
    """Read whichever split manifests exist under `root`."""
    root = Path(root)
    out = {}
    for split in splits:
        path = manifest_path(root, split)
        if path.exists():
            out[split] = DatasetManifest.load(path, check_files=check_files)
    if not out:
        raise FileNotFoundError(f"no manifests under {root}")
    return out


@dataclass
class KeypointStats:
    """Pelvis-relative clouds for dataset statistics (device frame, cm)."""

    head: np.ndarray  # (N, 3)
    left_foot: np.ndarray  # (N, 3)
    categories: list  # per frame

    def table(self) -> dict:
        out = {}
        for name, cloud in (("head", self.head), ("left_foot", self.left_foot)):
            out[name] = {
                "mean": cloud.mean(axis=0).tolist(),
                "variance": cloud.var(axis=0).tolist(),
            }
        return out


def compute_keypoint_stats(root, splits=SPLITS) -> KeypointStats:
    """Head and left-foot positions relative to the hip midpoint."""
    from .records import load_record  # local import keeps module load light

    root = Path(root)
    manifests = load_manifests(root, splits)
    head_i = _TOPOLOGY.index("head")
    foot_i = _TOPOLOGY.index("left_foot")
    hip_l, hip_r = _TOPOLOGY.index("left_thigh"), _TOPOLOGY.index("right_thigh")
    heads, feet, cats = [], [], []
    for manifest in manifests.values():
        for motion in manifest.motions:
            for ref in motion.frames:
                record = load_record(root / ref)
                joints = record.joints_device
                pelvis = 0.5 * (joints[hip_l] + joints[hip_r])
                heads.append(joints[head_i] - pelvis)
                feet.append(joints[foot_i] - pelvis)
                cats.append(motion.category)
    if not heads:
        raise ValueError(f"no frames found under {root}")
    return KeypointStats(
        head=np.stack(heads), left_foot=np.stack(feet), categories=cats
    )
