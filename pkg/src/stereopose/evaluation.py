"""Model evaluation over dataset splits.

Runs the 2D and 3D modules over a split, scores every frame with MPJPE
and PA-MPJPE against the stored device-frame pose, and can additionally
measure how close decoded 2D keypoints land to the ground truth in
heatmap-cell units.
"""

import numpy as np
import torch

from .camera import decode_heatmaps
from .data import StereoFrameDataset, make_loader
from .metrics import FrameEval, mpjpe, pa_mpjpe
from .pose2d import Pose2DNet, normalize_images
from .pose3d import Pose3DNet


def _forward_heatmaps(model2d: Pose2DNet, batch: dict):
    mono = model2d.config.variant == "monocular"
    out = model2d(
        normalize_images(batch["image_left"]),
        None if mono else normalize_images(batch["image_right"]),
    )
    return out


@torch.no_grad()
def evaluate_models(
    model2d: Pose2DNet,
    model3d: Pose3DNet,
    dataset: StereoFrameDataset,
    batch_size: int = 16,
    run: int = 0,
) -> list:
    """Per-frame FrameEval rows for one split."""
    model2d.eval()
    model3d.eval()
    loader = make_loader(dataset, batch_size, shuffle=False)
    rows = []
    for batch in loader:
        out2 = _forward_heatmaps(model2d, batch)
        out3 = model3d(out2.heatmaps_left, out2.heatmaps_right)
        pred = out3.pose.double().numpy()
        target = batch["pose"].double().numpy()
        for b in range(pred.shape[0]):
            rows.append(
                FrameEval(
                    category=batch["category"][b],
                    run=run,
                    mpjpe_mm=mpjpe(target[b], pred[b]),
                    pa_mpjpe_mm=pa_mpjpe(target[b], pred[b]),
                )
            )
    return rows


@torch.no_grad()
def keypoint_cell_accuracy(
    model2d: Pose2DNet,
    dataset: StereoFrameDataset,
    batch_size: int = 16,
    max_cells: float = 2.0,
) -> float:
    """Fraction of visible keypoints decoded within `max_cells` heatmap cells."""
    model2d.eval()
    loader = make_loader(dataset, batch_size, shuffle=False)
    input_size = dataset.rig_config.image_size
    cell_px = input_size / dataset.heatmap_size
    mono = model2d.config.variant == "monocular"
    hits, total = 0, 0
    for batch in loader:
        out = _forward_heatmaps(model2d, batch)
        views = [("left", out.heatmaps_left)]
        if not mono:
            views.append(("right", out.heatmaps_right))
        for side, stacks in views:
            gt_px = batch[f"keypoints_{side}"].numpy()
            visible = batch[f"visible_{side}"].numpy()
            for b in range(stacks.shape[0]):
                decoded = decode_heatmaps(
                    stacks[b].numpy(), input_size=input_size, threshold=-np.inf
                )
                d = np.linalg.norm(decoded.coords - gt_px[b], axis=1) / cell_px
                hits += int(np.sum(d[visible[b]] <= max_cells))
                total += int(np.sum(visible[b]))
    if total == 0:
        raise ValueError("split has no visible keypoints")
    return hits / total


@torch.no_grad()
def oracle_frame_evals(dataset: StereoFrameDataset, run: int = 0) -> list:
    """Ground-truth poses scored against themselves; all metrics zero."""
    from .records import load_record

    rows = []
    for ref, category in dataset.items:
        record = load_record(dataset.root / ref)
        rows.append(
            FrameEval(
                category=category,
                run=run,
                mpjpe_mm=mpjpe(record.joints_device, record.joints_device),
                pa_mpjpe_mm=pa_mpjpe(record.joints_device, record.joints_device),
            )
        )
    return rows
