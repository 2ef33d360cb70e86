"""Stereo 2D module: encoders over both views, one decoder, 15 heatmaps each.

The main variant runs a single weight-shared encoder on both views,
concatenates the per-stage features channel-wise, and decodes through
one chain of (bilinear x2 + conv) stages with a skip connection at every
matching resolution; a final 1x1 head emits 30 channels split 15/15 per
view. Baselines: `stereo-dual` runs two independent single-view
encoder-decoders; `monocular` runs one on the left view only.
"""

from dataclasses import dataclass
import json
import hashlib

import torch
from torch import nn
import torch.nn.functional as F

from .encoders import (
    STANDARD_DEPTHS,
    EncoderConfig,
    ResidualEncoder,
    init_parameters,
    parameter_count,
)
from .skeleton import NUM_HEATMAP_JOINTS

VARIANTS = ("stereo-shared", "stereo-dual", "monocular")

# input normalization constants; images land roughly in [0, 1]
NORM_MEAN = 0.5
NORM_STD = 0.25


@dataclass(frozen=True)
class Pose2DConfig:
    backbone_depth: int = 18  # 18 | 34 | 50 | 101
    variant: str = "stereo-shared"
    weight_sharing: bool = True  # meaningful only for stereo-shared
    pretrained_encoder: str = ""  # optional weight file for the encoder
    input_size: int = 256
    heatmap_size: int = 64
    in_channels: int = 3
    miniature: bool = False  # tiny encoder/decoder for gradient tests
    decoder_width: int = 256

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if not self.miniature and self.backbone_depth not in STANDARD_DEPTHS:
            raise ValueError(
                f"backbone depth must be one of {sorted(STANDARD_DEPTHS)}"
            )
        if not self.weight_sharing and self.variant != "stereo-shared":
            raise ValueError("weight_sharing toggles only the stereo-shared variant")
        if self.input_size % self.heatmap_size != 0:
            raise ValueError("input size must be a multiple of the heatmap size")

    def encoder_config(self) -> EncoderConfig:
        if self.miniature:
            return EncoderConfig.miniature(in_channels=self.in_channels)
        return EncoderConfig.standard(self.backbone_depth, in_channels=self.in_channels)

    def to_dict(self) -> dict:
        return {
            "backbone_depth": self.backbone_depth,
            "variant": self.variant,
            "weight_sharing": self.weight_sharing,
            "pretrained_encoder": self.pretrained_encoder,
            "input_size": self.input_size,
            "heatmap_size": self.heatmap_size,
            "in_channels": self.in_channels,
            "miniature": self.miniature,
            "decoder_width": self.decoder_width,
        }

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


@dataclass
class Pose2DOutput:
    heatmaps_left: torch.Tensor  # (B, 15, h, h)
    heatmaps_right: torch.Tensor | None  # None for the monocular variant
    features_left: list  # per-stage encoder features
    features_right: list | None


def normalize_images(x: torch.Tensor) -> torch.Tensor:
    return (x - NORM_MEAN) / NORM_STD


class _UpStage(nn.Module):
    """Bilinear x2 followed by a 3x3 conv block, with an optional skip."""

    def __init__(self, in_ch: int, skip_ch: int, out_ch: int):
        super().__init__()
        self.conv = nn.Sequential(
            nn.Conv2d(in_ch + skip_ch, out_ch, 3, padding=1, bias=False),
            nn.BatchNorm2d(out_ch),
            nn.ReLU(inplace=True),
        )

    def forward(self, x, skip=None):
        x = F.interpolate(x, scale_factor=2, mode="bilinear", align_corners=False)
        if skip is not None:
            x = torch.cat([x, skip], dim=1)
        return self.conv(x)


class HeatmapNet(nn.Module):
    """Encoder(s) for `n_views` inputs plus one skip-connected decoder.

    With several views the per-stage features are concatenated along
    channels before each skip, so one decoder sees both views at once.
    """

    def __init__(
        self,
        enc_cfg: EncoderConfig,
        n_views: int,
        share_encoder: bool,
        out_channels: int,
        input_size: int,
        heatmap_size: int,
        decoder_width: int,
    ):
        super().__init__()
        self.n_views = n_views
        self.share_encoder = share_encoder
        n_encoders = 1 if share_encoder else n_views
        self.encoders = nn.ModuleList(
            ResidualEncoder(enc_cfg) for _ in range(n_encoders)
        )
        enc = self.encoders[0]
        stem_div = 4 if enc_cfg.stem_pool else 2
        resolutions = [input_size // (stem_div * 2**s) for s in range(len(enc.stages))]
        if resolutions[-1] < 1:
            raise ValueError("input too small for this encoder depth")
        skip_at = {
            res: ch * n_views for res, ch in zip(resolutions, enc.stage_channels)
        }

        width = decoder_width
        self.fuse = nn.Sequential(
            nn.Conv2d(skip_at[resolutions[-1]], width, 3, padding=1, bias=False),
            nn.BatchNorm2d(width),
            nn.ReLU(inplace=True),
        )
        stages = []
        res = resolutions[-1]
        while res < heatmap_size:
            res *= 2
            out_w = max(width // 2, 16)
            stages.append(_UpStage(width, skip_at.get(res, 0), out_w))
            width = out_w
        self.up_stages = nn.ModuleList(stages)
        self.skip_resolutions = [
            r for r in (resolutions[-1] * 2 ** (i + 1) for i in range(len(stages)))
        ]
        self.head = nn.Conv2d(width, out_channels, 1)
        init_parameters(self)

    def encode(self, views: list) -> list:
        """Per-view feature lists; one encoder applied to all views when shared."""
        if len(views) != self.n_views:
            raise ValueError(f"expected {self.n_views} views, got {len(views)}")
        return [
            self.encoders[0 if self.share_encoder else i](v)
            for i, v in enumerate(views)
        ]

    def forward(self, views: list) -> tuple[torch.Tensor, list]:
        per_view = self.encode(views)
        fused = [torch.cat(level, dim=1) for level in zip(*per_view)]
        by_res = {f.shape[-1]: f for f in fused}
        x = self.fuse(fused[-1])
        for stage, res in zip(self.up_stages, self.skip_resolutions):
            x = stage(x, by_res.get(res))
        return self.head(x), per_view


class Pose2DNet(nn.Module):
    """Variant dispatcher producing per-view heatmap stacks."""

    def __init__(self, config: Pose2DConfig):
        super().__init__()
        self.config = config
        enc_cfg = config.encoder_config()
        kwargs = dict(
            enc_cfg=enc_cfg,
            input_size=config.input_size,
            heatmap_size=config.heatmap_size,
            decoder_width=16 if config.miniature else config.decoder_width,
        )
        if config.variant == "stereo-shared":
            self.net = HeatmapNet(
                n_views=2,
                share_encoder=config.weight_sharing,
                out_channels=2 * NUM_HEATMAP_JOINTS,
                **kwargs,
            )
        elif config.variant == "stereo-dual":
            self.net_left = HeatmapNet(
                n_views=1, share_encoder=True,
                out_channels=NUM_HEATMAP_JOINTS, **kwargs,
            )
            self.net_right = HeatmapNet(
                n_views=1, share_encoder=True,
                out_channels=NUM_HEATMAP_JOINTS, **kwargs,
            )
        else:  # monocular
            self.net = HeatmapNet(
                n_views=1, share_encoder=True,
                out_channels=NUM_HEATMAP_JOINTS, **kwargs,
            )
        if config.pretrained_encoder:
            self._load_encoder_weights(config.pretrained_encoder)

    def _load_encoder_weights(self, path: str) -> None:
        from .tensorio import load_bundle

        tensors, _ = load_bundle(path)
        for enc in self.encoder_modules():
            state = {k: torch.from_numpy(v) for k, v in tensors.items()}
            enc.load_state_dict(state)

    def encoder_modules(self) -> list:
        if self.config.variant == "stereo-dual":
            return [*self.net_left.encoders, *self.net_right.encoders]
        return list(self.net.encoders)

    def encoder_parameter_count(self) -> int:
        return sum(parameter_count(e) for e in self.encoder_modules())

    def _check_input(self, x: torch.Tensor, name: str) -> None:
        size = self.config.input_size
        if x.ndim != 4 or x.shape[1:] != (self.config.in_channels, size, size):
            raise ValueError(
                f"{name} must be (B, {self.config.in_channels}, {size}, {size}),"
                f" got {tuple(x.shape)}"
            )

    def forward(self, image_left, image_right=None) -> Pose2DOutput:
        self._check_input(image_left, "image_left")
        if self.config.variant == "monocular":
            heatmaps, feats = self.net([image_left])
            return Pose2DOutput(
                heatmaps_left=heatmaps,
                heatmaps_right=None,
                features_left=feats[0],
                features_right=None,
            )
        if image_right is None:
            raise ValueError(f"{self.config.variant} needs both views")
        self._check_input(image_right, "image_right")
        if self.config.variant == "stereo-shared":
            both, feats = self.net([image_left, image_right])
            return Pose2DOutput(
                heatmaps_left=both[:, :NUM_HEATMAP_JOINTS],
                heatmaps_right=both[:, NUM_HEATMAP_JOINTS:],
                features_left=feats[0],
                features_right=feats[1],
            )
        out_l, feats_l = self.net_left([image_left])
        out_r, feats_r = self.net_right([image_right])
        return Pose2DOutput(
            heatmaps_left=out_l,
            heatmaps_right=out_r,
            features_left=feats_l[0],
            features_right=feats_r[0],
        )


def loss_2d(pred_left, pred_right, target_left, target_right) -> torch.Tensor:
    """Sum of per-view MSE losses; right-view terms drop out when absent."""
    if pred_left.shape != target_left.shape:
        raise ValueError(
            f"left shapes differ: {tuple(pred_left.shape)} vs {tuple(target_left.shape)}"
        )
    total = F.mse_loss(pred_left, target_left)
    if pred_right is not None:
        if pred_right.shape != target_right.shape:
            raise ValueError(
                f"right shapes differ: {tuple(pred_right.shape)}"
                f" vs {tuple(target_right.shape)}"
            )
        total = total + F.mse_loss(pred_right, target_right)
    return total


def build_pose2d(config: Pose2DConfig, seed: int = 0) -> Pose2DNet:
    """Deterministically initialized network."""
    torch.manual_seed(seed)
    return Pose2DNet(config)
