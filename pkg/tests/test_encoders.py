import pytest
import torch

from stereopose.encoders import (
    STANDARD_DEPTHS,
    EncoderConfig,
    ResidualEncoder,
    init_parameters,
    parameter_count,
)


def _basic_block_params(in_ch, ch, stride):
    n = 9 * in_ch * ch + 2 * ch + 9 * ch * ch + 2 * ch
    if stride != 1 or in_ch != ch:
        n += in_ch * ch + 2 * ch
    return n


def _bottleneck_params(in_ch, ch, stride):
    out = 4 * ch
    n = in_ch * ch + 2 * ch + 9 * ch * ch + 2 * ch + ch * out + 2 * out
    if stride != 1 or in_ch != out:
        n += in_ch * out + 2 * out
    return n


def _expected_params(depth):
    """Closed-form parameter count for a headless four-stage residual net."""
    kind, stage_blocks = STANDARD_DEPTHS[depth]
    block = _basic_block_params if kind == "basic" else _bottleneck_params
    expansion = 1 if kind == "basic" else 4
    total = 3 * 64 * 49 + 2 * 64  # 7x7 stem and its norm
    in_ch = 64
    for s, n_blocks in enumerate(stage_blocks):
        width = 64 * (2**s)
        total += block(in_ch, width, stride=1 if s == 0 else 2)
        in_ch = width * expansion
        total += (n_blocks - 1) * block(in_ch, width, stride=1)
    return total


def test_closed_form_matches_published_counts():
    # classifier-free counts: published totals minus the (width*1000+1000) head
    assert _expected_params(18) == 11_689_512 - 513_000
    assert _expected_params(34) == 21_797_672 - 513_000
    assert _expected_params(50) == 25_557_032 - 2_049_000
    assert _expected_params(101) == 44_549_160 - 2_049_000


@pytest.mark.parametrize("depth", [18, 34, 50, 101])
def test_encoder_parameter_counts(depth):
    encoder = ResidualEncoder(EncoderConfig.standard(depth))
    assert parameter_count(encoder) == _expected_params(depth)


def test_standard_rejects_unknown_depth():
    with pytest.raises(ValueError):
        EncoderConfig.standard(19)


def test_forward_shapes_basic():
    encoder = ResidualEncoder(EncoderConfig.standard(18))
    encoder.eval()
    with torch.no_grad():
        feats = encoder(torch.zeros(1, 3, 256, 256))
    assert [tuple(f.shape) for f in feats] == [
        (1, 64, 64, 64),
        (1, 128, 32, 32),
        (1, 256, 16, 16),
        (1, 512, 8, 8),
    ]
    assert encoder.stage_channels == [64, 128, 256, 512]
    assert encoder.downsample_factor == 32


def test_forward_shapes_bottleneck():
    encoder = ResidualEncoder(EncoderConfig.standard(50))
    encoder.eval()
    with torch.no_grad():
        feats = encoder(torch.zeros(1, 3, 64, 64))
    assert [f.shape[1] for f in feats] == [256, 512, 1024, 2048]
    assert feats[-1].shape[-1] == 64 // encoder.downsample_factor


def test_miniature_variant():
    config = EncoderConfig.miniature(in_channels=2)
    encoder = ResidualEncoder(config)
    encoder.eval()
    with torch.no_grad():
        feats = encoder(torch.zeros(1, 2, 32, 32))
    assert [tuple(f.shape) for f in feats] == [(1, 8, 16, 16), (1, 16, 8, 8)]
    assert encoder.downsample_factor == 4
    assert parameter_count(encoder) < 20_000


def test_init_parameters_seeded():
    config = EncoderConfig.miniature()

    def build(seed):
        torch.manual_seed(seed)
        enc = ResidualEncoder(config)
        init_parameters(enc)
        return enc

    a, b, c = build(0), build(0), build(1)
    for pa, pb in zip(a.parameters(), b.parameters()):
        assert torch.equal(pa, pb)
    assert any(
        not torch.equal(pa, pc) for pa, pc in zip(a.parameters(), c.parameters())
    )
    for name, m in a.named_modules():
        if isinstance(m, torch.nn.BatchNorm2d):
            assert torch.all(m.weight == 1.0), name
            assert torch.all(m.bias == 0.0), name
