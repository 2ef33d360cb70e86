"""Training orchestration: separate and end-to-end strategies, ablations.

The schedule holds the base learning rate for the first half of the
epochs, then decays linearly to zero at the end; interpolation is
epoch-granular. `separate` trains the 2D module with the heatmap loss,
freezes it (eval mode, no gradients), and trains the 3D module on its
predicted heatmaps. `end2end` optimizes the unweighted sum of the 2D and
3D losses through both modules at once. Every run is reproducible from
its seed; reports record the config hash so artifacts can be matched.
"""

from dataclasses import dataclass, field, replace
import hashlib
import json
from pathlib import Path
import time

import numpy as np
import torch
import yaml

from .camera import RigConfig
from .checkpoint import save_checkpoint, state_checksum
from .data import StereoFrameDataset, make_loader
from .evaluation import evaluate_models
from .metrics import EvalReport, aggregate, combine_run_reports
from .pose2d import Pose2DConfig, Pose2DNet, build_pose2d, loss_2d, normalize_images
from .pose3d import Pose3DConfig, Pose3DNet, build_pose3d, loss_3d

STRATEGIES = ("separate", "end2end")


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 16
    epochs: int = 10
    base_lr: float = 1e-3
    adam_betas: tuple = (0.9, 0.999)
    strategy: str = "separate"
    runs: int = 3
    seeds: tuple = (0, 1, 2)
    pose2d: Pose2DConfig = field(default_factory=Pose2DConfig)
    pose3d: Pose3DConfig = field(default_factory=Pose3DConfig)
    rig: RigConfig = field(default_factory=RigConfig)
    gt_heatmaps_for_3d: bool = False  # alternative 3D target, off by default

    def __post_init__(self):
        if self.epochs < 2 or self.epochs % 2 != 0:
            raise ValueError("epochs must be even (half constant, half decay)")
        if self.runs < 1:
            raise ValueError("need at least one run")
        if len(self.seeds) < self.runs or len(set(self.seeds)) != len(self.seeds):
            raise ValueError("need one distinct seed per run")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}")
        mono = self.pose2d.variant == "monocular"
        if self.pose3d.n_views != (1 if mono else 2):
            raise ValueError("pose3d n_views must match the 2D variant")
        if self.pose2d.heatmap_size != self.pose3d.heatmap_size:
            raise ValueError("2D and 3D heatmap sizes must agree")

    def to_dict(self) -> dict:
        return {
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "base_lr": self.base_lr,
            "adam_betas": list(self.adam_betas),
            "strategy": self.strategy,
            "runs": self.runs,
            "seeds": list(self.seeds),
            "pose2d": self.pose2d.to_dict(),
            "pose3d": self.pose3d.to_dict(),
            "rig": self.rig.to_dict(),
            "gt_heatmaps_for_3d": self.gt_heatmaps_for_3d,
        }

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    def save(self, path) -> None:
        Path(path).write_text(yaml.safe_dump(self.to_dict(), sort_keys=True))

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        if "pose2d" in d:
            d["pose2d"] = Pose2DConfig(**d["pose2d"])
        if "pose3d" in d:
            p3 = dict(d["pose3d"])
            if "channels" in p3:
                p3["channels"] = tuple(p3["channels"])
            d["pose3d"] = Pose3DConfig(**p3)
        if "rig" in d:
            d["rig"] = RigConfig(**d["rig"])
        for key in ("adam_betas", "seeds"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)

    @classmethod
    def load(cls, path) -> "TrainConfig":
        data = yaml.safe_load(Path(path).read_text())
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ValueError(f"config must be a mapping, got {type(data).__name__}")
        return cls.from_dict(data)


def lr_at(fraction: float, config: TrainConfig) -> float:
    """Base rate through fraction 0.5, then linear to zero at 1.0."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"epoch fraction must lie in [0, 1], got {fraction}")
    if fraction <= 0.5:
        return config.base_lr
    return config.base_lr * (1.0 - fraction) / 0.5


@dataclass
class RunReport:
    seed: int
    strategy: str
    config_hash: str
    train_losses: dict  # phase name -> per-epoch mean loss
    val_losses: dict  # phase name -> per-epoch mean loss (empty without val)
    eval: dict | None  # EvalReport dict over the test split, if present
    param_checksums: dict  # checkpoint name -> state digest
    checkpoints: dict  # checkpoint name -> filename
    wall_clock_s: float

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "strategy": self.strategy,
            "config_hash": self.config_hash,
            "train_losses": self.train_losses,
            "val_losses": self.val_losses,
            "eval": self.eval,
            "param_checksums": self.param_checksums,
            "checkpoints": self.checkpoints,
            "wall_clock_s": self.wall_clock_s,
        }

    def comparable_dict(self) -> dict:
        """Everything reproducible across reruns (wall clock excluded)."""
        d = self.to_dict()
        d.pop("wall_clock_s")
        return d

    def save(self, path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), sort_keys=True, indent=1)
        )

    @classmethod
    def load(cls, path) -> "RunReport":
        return cls(**json.loads(Path(path).read_text()))


def _seed_everything(seed: int) -> None:
    torch.manual_seed(seed)
    np.random.seed(seed % 2**32)
    torch.use_deterministic_algorithms(True)


def _batch_loss_2d(model2d: Pose2DNet, batch: dict) -> torch.Tensor:
    mono = model2d.config.variant == "monocular"
    out = model2d(
        normalize_images(batch["image_left"]),
        None if mono else normalize_images(batch["image_right"]),
    )
    return loss_2d(
        out.heatmaps_left,
        out.heatmaps_right,
        batch["heatmaps_left"],
        None if mono else batch["heatmaps_right"],
    )


def _heatmaps_for_3d(
    model2d: Pose2DNet, batch: dict, config: TrainConfig, live: bool
):
    """(left, right) heatmap pair feeding the 3D module."""
    mono = model2d.config.variant == "monocular"
    if config.gt_heatmaps_for_3d:
        return batch["heatmaps_left"], None if mono else batch["heatmaps_right"]
    if live:
        out = model2d(
            normalize_images(batch["image_left"]),
            None if mono else normalize_images(batch["image_right"]),
        )
        return out.heatmaps_left, out.heatmaps_right
    with torch.no_grad():
        out = model2d(
            normalize_images(batch["image_left"]),
            None if mono else normalize_images(batch["image_right"]),
        )
    return out.heatmaps_left, out.heatmaps_right


def _batch_loss_3d(
    model2d: Pose2DNet,
    model3d: Pose3DNet,
    batch: dict,
    config: TrainConfig,
    live: bool,
) -> torch.Tensor:
    h_l, h_r = _heatmaps_for_3d(model2d, batch, config, live)
    out3 = model3d(h_l, h_r)
    return loss_3d(
        batch["pose"],
        out3.pose,
        (h_l, h_r),
        (out3.recon_left, out3.recon_right),
        model3d.config,
    )


def _run_phase(
    modules: list,
    parameters,
    loader,
    val_loader,
    batch_loss,
    config: TrainConfig,
) -> tuple[list, list]:
    """One optimization phase over the full epoch schedule."""
    optimizer = torch.optim.Adam(
        parameters, lr=config.base_lr, betas=config.adam_betas
    )
    train_curve, val_curve = [], []
    for epoch in range(config.epochs):
        lr = lr_at(epoch / config.epochs, config)
        for group in optimizer.param_groups:
            group["lr"] = lr
        for m in modules:
            m.train()
        losses = []
        for batch in loader:
            optimizer.zero_grad()
            loss = batch_loss(batch)
            loss.backward()
            optimizer.step()
            losses.append(float(loss.detach()))
        train_curve.append(float(np.mean(losses)))
        if val_loader is not None:
            for m in modules:
                m.eval()
            with torch.no_grad():
                vals = [float(batch_loss(batch)) for batch in val_loader]
            val_curve.append(float(np.mean(vals)))
    for m in modules:
        m.eval()
    return train_curve, val_curve


def _final_eval(
    model2d: Pose2DNet,
    model3d: Pose3DNet,
    data_root,
    config: TrainConfig,
    seed: int,
) -> dict | None:
    try:
        test = StereoFrameDataset(data_root, "test", rig_config=config.rig)
    except FileNotFoundError:
        return None
    if len(test) == 0:
        return None
    rows = evaluate_models(model2d, model3d, test, batch_size=config.batch_size)
    return aggregate(rows).to_dict()


def train_separate(
    data_root, config: TrainConfig, seed: int, out_dir
) -> RunReport:
    """Phase 1: 2D module alone. Phase 2: 3D module on frozen 2D outputs."""
    if config.strategy != "separate":
        raise ValueError("config.strategy must be 'separate'")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    _seed_everything(seed)
    train_set = StereoFrameDataset(data_root, "train", rig_config=config.rig)
    val_loader = _maybe_val_loader(data_root, config)

    model2d = build_pose2d(config.pose2d, seed)
    loader = make_loader(train_set, config.batch_size, shuffle=True, seed=seed)
    curve_2d, val_2d = _run_phase(
        [model2d],
        model2d.parameters(),
        loader,
        val_loader,
        lambda batch: _batch_loss_2d(model2d, batch),
        config,
    )

    model2d.eval()
    for p in model2d.parameters():
        p.requires_grad_(False)
    frozen_digest = state_checksum(model2d)

    model3d = build_pose3d(config.pose3d, seed + 1)
    loader = make_loader(train_set, config.batch_size, shuffle=True, seed=seed + 1)
    curve_3d, val_3d = _run_phase(
        [model3d],
        model3d.parameters(),
        loader,
        val_loader,
        lambda batch: _batch_loss_3d(model2d, model3d, batch, config, live=False),
        config,
    )
    if state_checksum(model2d) != frozen_digest:
        raise AssertionError("2D parameters changed while frozen")

    save_checkpoint(out_dir / "pose2d.ckpt", model2d, config.pose2d.config_hash())
    save_checkpoint(out_dir / "pose3d.ckpt", model3d, config.pose3d.config_hash())
    report = RunReport(
        seed=seed,
        strategy="separate",
        config_hash=config.config_hash(),
        train_losses={"pose2d": curve_2d, "pose3d": curve_3d},
        val_losses={"pose2d": val_2d, "pose3d": val_3d},
        eval=_final_eval(model2d, model3d, data_root, config, seed),
        param_checksums={
            "pose2d": state_checksum(model2d),
            "pose3d": state_checksum(model3d),
        },
        checkpoints={"pose2d": "pose2d.ckpt", "pose3d": "pose3d.ckpt"},
        wall_clock_s=time.perf_counter() - started,
    )
    report.save(out_dir / "report.json")
    return report


def train_end2end(
    data_root,
    config: TrainConfig,
    seed: int,
    out_dir,
    loss3d_scale: float = 1.0,
) -> RunReport:
    """Joint phase: loss_2d + loss_3d with gradients through both modules."""
    if config.strategy != "end2end":
        raise ValueError("config.strategy must be 'end2end'")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    _seed_everything(seed)
    train_set = StereoFrameDataset(data_root, "train", rig_config=config.rig)
    val_loader = _maybe_val_loader(data_root, config)

    model2d = build_pose2d(config.pose2d, seed)
    model3d = build_pose3d(config.pose3d, seed + 1)
    combined = torch.nn.ModuleDict({"pose2d": model2d, "pose3d": model3d})

    def batch_loss(batch):
        total = _batch_loss_2d(model2d, batch)
        if loss3d_scale != 0.0:
            total = total + loss3d_scale * _batch_loss_3d(
                model2d, model3d, batch, config, live=True
            )
        return total

    loader = make_loader(train_set, config.batch_size, shuffle=True, seed=seed)
    curve, val_curve = _run_phase(
        [model2d, model3d],
        combined.parameters(),
        loader,
        val_loader,
        batch_loss,
        config,
    )
    save_checkpoint(out_dir / "combined.ckpt", combined, config.config_hash())
    report = RunReport(
        seed=seed,
        strategy="end2end",
        config_hash=config.config_hash(),
        train_losses={"combined": curve},
        val_losses={"combined": val_curve},
        eval=_final_eval(model2d, model3d, data_root, config, seed),
        param_checksums={"combined": state_checksum(combined)},
        checkpoints={"combined": "combined.ckpt"},
        wall_clock_s=time.perf_counter() - started,
    )
    report.save(out_dir / "report.json")
    return report


def _maybe_val_loader(data_root, config: TrainConfig):
    try:
        val_set = StereoFrameDataset(data_root, "val", rig_config=config.rig)
    except FileNotFoundError:
        return None
    if len(val_set) == 0:
        return None
    return make_loader(val_set, config.batch_size, shuffle=False)


def train(data_root, config: TrainConfig, seed: int, out_dir) -> RunReport:
    if config.strategy == "separate":
        return train_separate(data_root, config, seed, out_dir)
    return train_end2end(data_root, config, seed, out_dir)


def train_runs(data_root, config: TrainConfig, out_dir) -> list:
    """One report per seed, written under run_<seed> subdirectories."""
    out_dir = Path(out_dir)
    reports = []
    for seed in config.seeds[: config.runs]:
        reports.append(train(data_root, config, seed, out_dir / f"run_{seed}"))
    return reports


def ablation_cell_name(cell: dict) -> str:
    ws = "ws" if cell.get("weight_sharing", True) else "nows"
    return (
        f"{cell['variant']}-d{cell.get('backbone_depth', 18)}"
        f"-{ws}-{cell.get('strategy', 'separate')}"
    )


def default_ablation_grid() -> list:
    """The comparison cells: variants, weight sharing, both strategies."""
    return [
        {"variant": "stereo-shared", "weight_sharing": True, "strategy": "separate"},
        {"variant": "stereo-shared", "weight_sharing": False, "strategy": "separate"},
        {"variant": "stereo-dual", "strategy": "separate"},
        {"variant": "monocular", "strategy": "separate"},
        {"variant": "stereo-shared", "weight_sharing": True, "strategy": "end2end"},
    ]


def cell_config(base: TrainConfig, cell: dict) -> TrainConfig:
    variant = cell.get("variant", base.pose2d.variant)
    pose2d = replace(
        base.pose2d,
        variant=variant,
        backbone_depth=cell.get("backbone_depth", base.pose2d.backbone_depth),
        weight_sharing=(
            cell.get("weight_sharing", base.pose2d.weight_sharing)
            if variant == "stereo-shared"
            else True
        ),
    )
    pose3d = replace(base.pose3d, n_views=1 if variant == "monocular" else 2)
    return replace(
        base,
        strategy=cell.get("strategy", base.strategy),
        pose2d=pose2d,
        pose3d=pose3d,
    )


def ablation_suite(data_root, grid: list, base: TrainConfig, out_dir) -> list:
    """Run every cell over the shared seed list; cell failures are isolated.

    Returns one row per cell: the combined across-run metrics, parameter
    counts, and run directories, or the captured error for failed cells.
    """
    out_dir = Path(out_dir)
    rows = []
    for cell in grid:
        name = ablation_cell_name(cell)
        try:
            config = cell_config(base, cell)
            reports = train_runs(data_root, config, out_dir / name)
            evals = [EvalReport.from_dict(r.eval) for r in reports if r.eval]
            if not evals:
                raise ValueError("no test split evaluation available")
            combined = combine_run_reports(evals)
            probe = build_pose2d(config.pose2d, seed=config.seeds[0])
            rows.append(
                {
                    "name": name,
                    "cell": dict(cell),
                    "overall": combined.overall,
                    "encoder_params": probe.encoder_parameter_count(),
                    "report": combined.to_dict(),
                    "runs": [r.comparable_dict() for r in reports],
                }
            )
        except Exception as exc:  # isolate per-cell failures, keep the suite going
            rows.append({"name": name, "cell": dict(cell), "error": repr(exc)})
    (out_dir / "ablation.json").parent.mkdir(parents=True, exist_ok=True)
    (out_dir / "ablation.json").write_text(
        json.dumps(rows, sort_keys=True, indent=1)
    )
    return rows
