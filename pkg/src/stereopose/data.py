"""Torch-facing dataset over generated frames.

Images load as float32 in [0, 1]; ground-truth heatmaps are rendered on
the fly from the stored keypoints (they are cheap and keeping them off
disk halves the dataset size). Poses are device-frame centimeters.
"""

from pathlib import Path

import numpy as np
from PIL import Image
import torch
from torch.utils.data import DataLoader, Dataset

from .camera import RigConfig, render_heatmaps
from .records import DatasetManifest, load_record, manifest_path
from .skeleton import HEATMAP_SIZE


class StereoFrameDataset(Dataset):
    def __init__(
        self,
        root,
        split: str,
        rig_config: RigConfig | None = None,
        heatmap_size: int = HEATMAP_SIZE,
        check_files: bool = False,
    ):
        self.root = Path(root)
        path = manifest_path(self.root, split)
        if not path.exists():
            raise FileNotFoundError(f"no manifest for split {split!r} at {path}")
        self.manifest = DatasetManifest.load(path, check_files=check_files)
        self.rig_config = rig_config or RigConfig()
        self.heatmap_size = heatmap_size
        self.items = [
            (ref, motion.category)
            for motion in self.manifest.motions
            for ref in motion.frames
        ]

    def __len__(self) -> int:
        return len(self.items)

    def __getitem__(self, i: int) -> dict:
        ref, category = self.items[i]
        record = load_record(self.root / ref)

        def image(rel):
            arr = np.asarray(Image.open(self.root / rel), dtype=np.float32) / 255.0
            return torch.from_numpy(arr.transpose(2, 0, 1))

        def heatmaps(kps):
            return torch.from_numpy(
                render_heatmaps(
                    kps,
                    input_size=self.rig_config.image_size,
                    size=self.heatmap_size,
                    sigma=self.rig_config.sigma,
                )
            )

        return {
            "image_left": image(record.left_image),
            "image_right": image(record.right_image),
            "heatmaps_left": heatmaps(record.keypoints_left),
            "heatmaps_right": heatmaps(record.keypoints_right),
            "pose": torch.from_numpy(
                np.asarray(record.joints_device, dtype=np.float32)
            ),
            "visible_left": torch.from_numpy(record.keypoints_left.visible.copy()),
            "visible_right": torch.from_numpy(record.keypoints_right.visible.copy()),
            "keypoints_left": torch.from_numpy(
                record.keypoints_left.coords.astype(np.float32)
            ),
            "keypoints_right": torch.from_numpy(
                record.keypoints_right.coords.astype(np.float32)
            ),
            "category": category,
        }


def make_loader(
    dataset: Dataset, batch_size: int, shuffle: bool, seed: int = 0
) -> DataLoader:
    """Single-process loader with a seeded shuffle for reproducibility."""
    generator = torch.Generator()
    generator.manual_seed(seed)
    return DataLoader(
        dataset,
        batch_size=batch_size,
        shuffle=shuffle,
        num_workers=0,
        generator=generator if shuffle else None,
        drop_last=False,
    )
