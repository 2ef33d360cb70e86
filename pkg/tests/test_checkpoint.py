import pytest
import torch

from stereopose.checkpoint import (
    CheckpointMismatch,
    load_checkpoint,
    save_checkpoint,
    state_checksum,
)
from stereopose.pose3d import Pose3DConfig, build_pose3d


def test_round_trip(tmp_path):
    config = Pose3DConfig.miniature()
    model = build_pose3d(config, seed=5)
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, model, config.config_hash())

    other = build_pose3d(config, seed=6)
    assert state_checksum(other) != state_checksum(model)
    load_checkpoint(path, other, config.config_hash())
    assert state_checksum(other) == state_checksum(model)
    for (ka, va), (kb, vb) in zip(
        model.state_dict().items(), other.state_dict().items()
    ):
        assert ka == kb
        assert torch.equal(va, vb)


def test_hash_mismatch(tmp_path):
    config = Pose3DConfig.miniature()
    model = build_pose3d(config, seed=0)
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, model, config.config_hash())
    with pytest.raises(CheckpointMismatch):
        load_checkpoint(path, model, "0" * 64)


def test_checkpoint_bytes_stable(tmp_path):
    config = Pose3DConfig.miniature()
    model = build_pose3d(config, seed=1)
    a, b = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    save_checkpoint(a, model, config.config_hash())
    save_checkpoint(b, model, config.config_hash())
    assert a.read_bytes() == b.read_bytes()


def test_checksum_covers_buffers():
    config = Pose3DConfig.miniature()
    model = build_pose3d(config, seed=2)
    before = state_checksum(model)
    # poke a batch-norm running stat, not a learnable parameter
    for m in model.modules():
        if isinstance(m, torch.nn.BatchNorm2d):
            m.running_mean += 1.0
            break
    assert state_checksum(model) != before


def test_checksum_ignores_dict_order():
    model = build_pose3d(Pose3DConfig.miniature(), seed=3)
    assert state_checksum(model) == state_checksum(model)
