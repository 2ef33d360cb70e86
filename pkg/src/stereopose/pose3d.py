"""3D module: heatmap autoencoder with a pose branch and a rebuild branch.

The predicted stereo heatmaps are concatenated channel-wise, encoded by
strided convolutions into an embedding, then decoded twice: a fully
connected branch regresses the 16x3 pose (cm, device frame) and a
transposed-convolution branch reconstructs the input heatmaps. The
training loss couples the pose terms with the reconstruction terms:

    loss = w_pose * (mpjpe + w_cos * cos) + w_hm * (mse_L + mse_R)

with w_pose = 0.1, w_cos = 0.01, w_hm = 0.001. The cosine term sums the
negative bone-direction similarity over all 15 bones, so it sits in
[-15, 15] and equals -15 at perfect directional agreement.
"""

from dataclasses import dataclass
import hashlib
import json

import torch
from torch import nn
import torch.nn.functional as F

from .encoders import init_parameters
from .skeleton import NUM_HEATMAP_JOINTS, NUM_JOINTS, build_topology

COS_EPS = 1e-8

_TOPOLOGY = build_topology()
_BONE_PARENTS = torch.tensor([b[0] for b in _TOPOLOGY.bones])
_BONE_CHILDREN = torch.tensor([b[1] for b in _TOPOLOGY.bones])


@dataclass(frozen=True)
class Pose3DConfig:
    embedding_dim: int = 512
    channels: tuple = (64, 128, 256, 512)  # strided encoder stages
    fc_hidden: int = 512  # pose branch hidden width
    heatmap_size: int = 64
    n_views: int = 2  # 1 for the monocular baseline
    pose_weight: float = 0.1
    cos_weight: float = 0.01
    hm_weight: float = 0.001

    def __post_init__(self):
        if self.n_views not in (1, 2):
            raise ValueError("n_views must be 1 or 2")
        if self.heatmap_size % (2 ** len(self.channels)) != 0:
            raise ValueError("heatmap size must survive one halving per stage")

    @property
    def in_channels(self) -> int:
        return self.n_views * NUM_HEATMAP_JOINTS

    @classmethod
    def miniature(cls, n_views: int = 2) -> "Pose3DConfig":
        return cls(
            embedding_dim=16,
            channels=(8, 16),
            fc_hidden=16,
            heatmap_size=8,
            n_views=n_views,
        )

    def to_dict(self) -> dict:
        return {
            "embedding_dim": self.embedding_dim,
            "channels": list(self.channels),
            "fc_hidden": self.fc_hidden,
            "heatmap_size": self.heatmap_size,
            "n_views": self.n_views,
            "pose_weight": self.pose_weight,
            "cos_weight": self.cos_weight,
            "hm_weight": self.hm_weight,
        }

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


@dataclass
class Pose3DOutput:
    pose: torch.Tensor  # (B, 16, 3) cm
    recon_left: torch.Tensor  # (B, 15, h, h)
    recon_right: torch.Tensor | None


class Pose3DNet(nn.Module):
    def __init__(self, config: Pose3DConfig):
        super().__init__()
        self.config = config
        enc = []
        in_ch = config.in_channels
        for ch in config.channels:
            enc += [
                nn.Conv2d(in_ch, ch, 3, stride=2, padding=1, bias=False),
                nn.BatchNorm2d(ch),
                nn.ReLU(inplace=True),
            ]
            in_ch = ch
        self.encoder = nn.Sequential(*enc)
        self.bottom = config.heatmap_size // (2 ** len(config.channels))
        flat = config.channels[-1] * self.bottom**2
        self.to_embedding = nn.Linear(flat, config.embedding_dim)
        self.pose_branch = nn.Sequential(
            nn.Linear(config.embedding_dim, config.fc_hidden),
            nn.ReLU(inplace=True),
            nn.Linear(config.fc_hidden, NUM_JOINTS * 3),
        )
        self.from_embedding = nn.Linear(config.embedding_dim, flat)
        dec = []
        chans = list(reversed(config.channels))
        for i, ch in enumerate(chans):
            out_ch = chans[i + 1] if i + 1 < len(chans) else config.in_channels
            dec.append(
                nn.ConvTranspose2d(ch, out_ch, 4, stride=2, padding=1)
            )
            if i + 1 < len(chans):
                dec += [nn.BatchNorm2d(out_ch), nn.ReLU(inplace=True)]
        self.heatmap_branch = nn.Sequential(*dec)
        init_parameters(self)

    def forward(self, heatmaps_left, heatmaps_right=None) -> Pose3DOutput:
        cfg = self.config
        expected = (NUM_HEATMAP_JOINTS, cfg.heatmap_size, cfg.heatmap_size)
        for name, h in (("left", heatmaps_left), ("right", heatmaps_right)):
            if h is None:
                continue
            if h.ndim != 4 or h.shape[1:] != expected:
                raise ValueError(
                    f"{name} heatmaps must be (B, {expected[0]}, {expected[1]},"
                    f" {expected[2]}), got {tuple(h.shape)}"
                )
        if cfg.n_views == 2:
            if heatmaps_right is None:
                raise ValueError("this config consumes a stereo heatmap pair")
            x = torch.cat([heatmaps_left, heatmaps_right], dim=1)
        else:
            x = heatmaps_left
        z = self.to_embedding(self.encoder(x).flatten(1))
        pose = self.pose_branch(z).view(-1, NUM_JOINTS, 3)
        grid = self.from_embedding(z).view(
            -1, cfg.channels[-1], self.bottom, self.bottom
        )
        recon = self.heatmap_branch(grid)
        if cfg.n_views == 2:
            return Pose3DOutput(
                pose=pose,
                recon_left=recon[:, :NUM_HEATMAP_JOINTS],
                recon_right=recon[:, NUM_HEATMAP_JOINTS:],
            )
        return Pose3DOutput(pose=pose, recon_left=recon, recon_right=None)


def mpjpe_loss(pose, pose_hat) -> torch.Tensor:
    """Mean joint distance (cm) over the batch: (1/BJ) sum of L2 norms."""
    if pose.shape != pose_hat.shape or pose.shape[-2:] != (NUM_JOINTS, 3):
        raise ValueError(
            f"poses must both be (B, {NUM_JOINTS}, 3), got"
            f" {tuple(pose.shape)} vs {tuple(pose_hat.shape)}"
        )
    return torch.linalg.norm(pose - pose_hat, dim=-1).mean()


def cos_loss(pose, pose_hat) -> torch.Tensor:
    """Negative bone-direction agreement, summed over bones, batch-averaged.

    Denominators carry a 1e-8 floor so zero-length bones (degenerate
    early predictions) stay finite.
    """
    if pose.shape != pose_hat.shape or pose.shape[-2:] != (NUM_JOINTS, 3):
        raise ValueError("poses must both be (B, 16, 3)")
    bones = pose[:, _BONE_CHILDREN] - pose[:, _BONE_PARENTS]  # (B, 15, 3)
    bones_hat = pose_hat[:, _BONE_CHILDREN] - pose_hat[:, _BONE_PARENTS]
    dot = (bones * bones_hat).sum(dim=-1)
    denom = (
        torch.linalg.norm(bones, dim=-1) * torch.linalg.norm(bones_hat, dim=-1)
    ).clamp_min(COS_EPS)
    return -(dot / denom).sum(dim=-1).mean()


def loss_3d(
    pose,
    pose_hat,
    heatmaps_pred: tuple,
    heatmaps_recon: tuple,
    config: Pose3DConfig,
) -> torch.Tensor:
    """Pose terms nested under w_pose plus weighted reconstruction MSEs.

    `heatmaps_pred` are the 2D module's outputs (the reconstruction
    target), `heatmaps_recon` the 3D module's rebuilt maps; each is a
    (left, right) tuple where right may be None for monocular inputs.
    """
    pose_term = mpjpe_loss(pose, pose_hat) + config.cos_weight * cos_loss(
        pose, pose_hat
    )
    total = config.pose_weight * pose_term
    for pred, recon in zip(heatmaps_pred, heatmaps_recon):
        if pred is None and recon is None:
            continue
        if pred is None or recon is None:
            raise ValueError("prediction/reconstruction views do not match")
        total = total + config.hm_weight * F.mse_loss(recon, pred)
    return total


def build_pose3d(config: Pose3DConfig, seed: int = 0) -> Pose3DNet:
    """Deterministically initialized network."""
    torch.manual_seed(seed)
    return Pose3DNet(config)
