"""Residual convolutional encoders for the heatmap network.

Standard depths 18/34 (basic blocks) and 50/101 (bottlenecks) follow the
usual two-conv / three-conv residual recipe: a strided 7x7 stem, a max
pool, then four stages halving resolution. A miniature variant (tiny
stem, two stages) exists purely for finite-difference gradient tests.
The forward pass returns the per-stage feature list so the decoder can
attach skip connections at every resolution.
"""

from dataclasses import dataclass

import torch
from torch import nn

# depth -> (block kind, blocks per stage)
STANDARD_DEPTHS = {
    18: ("basic", (2, 2, 2, 2)),
    34: ("basic", (3, 4, 6, 3)),
    50: ("bottleneck", (3, 4, 6, 3)),
    101: ("bottleneck", (3, 4, 23, 3)),
}


class BasicBlock(nn.Module):
    expansion = 1

    def __init__(self, in_ch: int, ch: int, stride: int = 1):
        super().__init__()
        self.conv1 = nn.Conv2d(in_ch, ch, 3, stride=stride, padding=1, bias=False)
        self.bn1 = nn.BatchNorm2d(ch)
        self.conv2 = nn.Conv2d(ch, ch, 3, padding=1, bias=False)
        self.bn2 = nn.BatchNorm2d(ch)
        self.relu = nn.ReLU(inplace=True)
        self.shortcut = None
        if stride != 1 or in_ch != ch:
            self.shortcut = nn.Sequential(
                nn.Conv2d(in_ch, ch, 1, stride=stride, bias=False),
                nn.BatchNorm2d(ch),
            )

    def forward(self, x):
        identity = x if self.shortcut is None else self.shortcut(x)
        out = self.relu(self.bn1(self.conv1(x)))
        out = self.bn2(self.conv2(out))
        return self.relu(out + identity)


class Bottleneck(nn.Module):
    expansion = 4

    def __init__(self, in_ch: int, ch: int, stride: int = 1):
        super().__init__()
        out_ch = ch * self.expansion
        self.conv1 = nn.Conv2d(in_ch, ch, 1, bias=False)
        self.bn1 = nn.BatchNorm2d(ch)
        self.conv2 = nn.Conv2d(ch, ch, 3, stride=stride, padding=1, bias=False)
        self.bn2 = nn.BatchNorm2d(ch)
        self.conv3 = nn.Conv2d(ch, out_ch, 1, bias=False)
        self.bn3 = nn.BatchNorm2d(out_ch)
        self.relu = nn.ReLU(inplace=True)
        self.shortcut = None
        if stride != 1 or in_ch != out_ch:
            self.shortcut = nn.Sequential(
                nn.Conv2d(in_ch, out_ch, 1, stride=stride, bias=False),
                nn.BatchNorm2d(out_ch),
            )

    def forward(self, x):
        identity = x if self.shortcut is None else self.shortcut(x)
        out = self.relu(self.bn1(self.conv1(x)))
        out = self.relu(self.bn2(self.conv2(out)))
        out = self.bn3(self.conv3(out))
        return self.relu(out + identity)


_BLOCKS = {"basic": BasicBlock, "bottleneck": Bottleneck}


@dataclass(frozen=True)
class EncoderConfig:
    """Stage layout; `standard(depth)` covers the usual four-stage nets."""

    block: str = "basic"
    stage_blocks: tuple = (2, 2, 2, 2)
    base_channels: int = 64
    in_channels: int = 3
    stem_kernel: int = 7  # 7 with pooling for full size, 3 without for mini
    stem_pool: bool = True

    @classmethod
    def standard(cls, depth: int, in_channels: int = 3) -> "EncoderConfig":
        if depth not in STANDARD_DEPTHS:
            raise ValueError(f"backbone depth must be one of {sorted(STANDARD_DEPTHS)}")
        block, blocks = STANDARD_DEPTHS[depth]
        return cls(block=block, stage_blocks=blocks, in_channels=in_channels)

    @classmethod
    def miniature(cls, in_channels: int = 3) -> "EncoderConfig":
        return cls(
            block="basic",
            stage_blocks=(1, 1),
            base_channels=8,
            in_channels=in_channels,
            stem_kernel=3,
            stem_pool=False,
        )


class ResidualEncoder(nn.Module):
    """Strided residual encoder returning one feature map per stage."""

    def __init__(self, config: EncoderConfig):
        super().__init__()
        self.config = config
        block = _BLOCKS[config.block]
        ch = config.base_channels
        self.stem = nn.Sequential(
            nn.Conv2d(
                config.in_channels,
                ch,
                config.stem_kernel,
                stride=2,
                padding=config.stem_kernel // 2,
                bias=False,
            ),
            nn.BatchNorm2d(ch),
            nn.ReLU(inplace=True),
        )
        self.pool = nn.MaxPool2d(3, stride=2, padding=1) if config.stem_pool else None
        stages = []
        in_ch = ch
        self.stage_channels = []
        for s, n_blocks in enumerate(config.stage_blocks):
            width = ch * (2**s)
            stride = 1 if s == 0 else 2
            blocks = [block(in_ch, width, stride=stride)]
            in_ch = width * block.expansion
            blocks += [block(in_ch, width) for _ in range(n_blocks - 1)]
            stages.append(nn.Sequential(*blocks))
            self.stage_channels.append(in_ch)
        self.stages = nn.ModuleList(stages)

    @property
    def downsample_factor(self) -> int:
        # stem /2, optional pool /2, then /2 per stage after the first
        return 2 * (2 if self.pool is not None else 1) * 2 ** (len(self.stages) - 1)

    def forward(self, x) -> list:
        x = self.stem(x)
        if self.pool is not None:
            x = self.pool(x)
        feats = []
        for stage in self.stages:
            x = stage(x)
            feats.append(x)
        return feats


def init_parameters(module: nn.Module) -> None:
    """Fan-in-scaled normal init for convs and linears, identity-ish BN."""
    for m in module.modules():
        if isinstance(m, (nn.Conv2d, nn.ConvTranspose2d, nn.Linear)):
            nn.init.kaiming_normal_(m.weight, mode="fan_in", nonlinearity="relu")
            if m.bias is not None:
                nn.init.zeros_(m.bias)
        elif isinstance(m, nn.BatchNorm2d):
            nn.init.ones_(m.weight)
            nn.init.zeros_(m.bias)


def parameter_count(module: nn.Module) -> int:
    return sum(p.numel() for p in module.parameters())
