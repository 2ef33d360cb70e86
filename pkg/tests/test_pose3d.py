from dataclasses import replace

import pytest
import torch

from stereopose.pose3d import (
    Pose3DConfig,
    build_pose3d,
    cos_loss,
    loss_3d,
    mpjpe_loss,
)

MINI = Pose3DConfig.miniature()


def _pose(batch=2, seed=0, dtype=torch.float64):
    g = torch.Generator().manual_seed(seed)
    return (torch.rand(batch, 16, 3, generator=g, dtype=dtype) - 0.5) * 60.0


def test_config_validation():
    with pytest.raises(ValueError):
        Pose3DConfig(n_views=3)
    with pytest.raises(ValueError):
        Pose3DConfig(heatmap_size=8)  # four halvings do not fit
    assert Pose3DConfig().in_channels == 30
    assert Pose3DConfig(n_views=1).in_channels == 15
    assert MINI.config_hash() == Pose3DConfig.miniature().config_hash()
    assert replace(MINI, fc_hidden=8).config_hash() != MINI.config_hash()


def test_forward_shapes_stereo():
    model = build_pose3d(MINI, seed=0)
    model.eval()
    g = torch.Generator().manual_seed(1)
    left = torch.rand(3, 15, 8, 8, generator=g)
    right = torch.rand(3, 15, 8, 8, generator=g)
    with torch.no_grad():
        out = model(left, right)
    assert out.pose.shape == (3, 16, 3)
    assert out.recon_left.shape == (3, 15, 8, 8)
    assert out.recon_right.shape == (3, 15, 8, 8)


def test_forward_shapes_monocular():
    model = build_pose3d(Pose3DConfig.miniature(n_views=1), seed=0)
    model.eval()
    with torch.no_grad():
        out = model(torch.rand(2, 15, 8, 8))
    assert out.pose.shape == (2, 16, 3)
    assert out.recon_right is None


def test_forward_validation():
    model = build_pose3d(MINI, seed=0)
    with pytest.raises(ValueError):
        model(torch.rand(2, 15, 8, 8))  # stereo config, one view
    with pytest.raises(ValueError):
        model(torch.rand(2, 15, 8, 8), torch.rand(2, 15, 4, 4))
    with pytest.raises(ValueError):
        model(torch.rand(2, 14, 8, 8), torch.rand(2, 15, 8, 8))


def test_forward_depends_on_input():
    model = build_pose3d(MINI, seed=0)
    model.eval()
    g = torch.Generator().manual_seed(2)
    a = torch.rand(1, 15, 8, 8, generator=g)
    b = torch.rand(1, 15, 8, 8, generator=g)
    with torch.no_grad():
        pose_a = model(a, a).pose
        pose_b = model(b, b).pose
    assert not torch.allclose(pose_a, pose_b)


def test_mpjpe_loss_hand_values():
    pose = _pose()
    assert float(mpjpe_loss(pose, pose.clone())) == 0.0
    offset = torch.tensor([3.0, 4.0, 0.0], dtype=torch.float64)
    assert float(mpjpe_loss(pose, pose + offset)) == pytest.approx(5.0, abs=1e-12)
    single = pose.clone()
    single[:, 0, 2] += 2.0
    assert float(mpjpe_loss(pose, single)) == pytest.approx(2.0 / 16, abs=1e-12)


def test_mpjpe_loss_validation():
    with pytest.raises(ValueError):
        mpjpe_loss(torch.zeros(2, 16, 3), torch.zeros(2, 15, 3))
    with pytest.raises(ValueError):
        mpjpe_loss(torch.zeros(2, 15, 3), torch.zeros(2, 15, 3))


def test_cos_loss_equality_and_bounds():
    pose = _pose(batch=3)
    assert float(cos_loss(pose, pose.clone())) == pytest.approx(-15.0, abs=1e-12)
    # translating every joint leaves bone directions alone
    assert float(cos_loss(pose, pose + 7.0)) == pytest.approx(-15.0, abs=1e-12)
    # point reflection flips every bone
    assert float(cos_loss(pose, -pose)) == pytest.approx(15.0, abs=1e-12)
    g = torch.Generator().manual_seed(3)
    for _ in range(20):
        other = (torch.rand(3, 16, 3, generator=g, dtype=torch.float64) - 0.5) * 60
        value = float(cos_loss(pose, other))
        assert -15.0 - 1e-9 <= value <= 15.0 + 1e-9


def test_cos_loss_zero_bones_stay_finite():
    pose = _pose()
    collapsed = torch.full((2, 16, 3), 5.0, dtype=torch.float64, requires_grad=True)
    loss = cos_loss(pose, collapsed)
    assert float(loss.detach()) == 0.0
    loss.backward()
    assert torch.isfinite(collapsed.grad).all()


def test_loss_3d_at_equality():
    # pose branch perfect, reconstruction returns the prediction untouched:
    # only the nested cosine term survives, scaled by both pose weights
    pose = _pose()
    g = torch.Generator().manual_seed(4)
    pred = tuple(torch.rand(2, 15, 8, 8, generator=g, dtype=torch.float64) for _ in range(2))
    total = loss_3d(pose, pose.clone(), pred, tuple(p.clone() for p in pred), MINI)
    assert float(total) == pytest.approx(-0.015, abs=1e-12)


def test_loss_3d_weighting():
    pose = _pose()
    g = torch.Generator().manual_seed(5)
    pred = tuple(torch.rand(2, 15, 8, 8, generator=g, dtype=torch.float64) for _ in range(2))
    recon = tuple(p + 1.0 for p in pred)
    offset = torch.tensor([3.0, 4.0, 0.0], dtype=torch.float64)
    total = loss_3d(pose, pose + offset, pred, recon, MINI)
    expected = 0.1 * (5.0 + 0.01 * -15.0) + 0.001 * 1.0 + 0.001 * 1.0
    assert float(total) == pytest.approx(expected, abs=1e-12)


def test_loss_3d_monocular_and_mismatch():
    pose = _pose()
    g = torch.Generator().manual_seed(6)
    left = torch.rand(2, 15, 8, 8, generator=g, dtype=torch.float64)
    total = loss_3d(pose, pose.clone(), (left, None), (left.clone(), None), MINI)
    assert float(total) == pytest.approx(-0.015, abs=1e-12)
    with pytest.raises(ValueError):
        loss_3d(pose, pose.clone(), (left, None), (left.clone(), left.clone()), MINI)


def test_custom_weights_respected():
    config = replace(MINI, pose_weight=1.0, cos_weight=0.0, hm_weight=0.5)
    pose = _pose()
    g = torch.Generator().manual_seed(7)
    pred = tuple(torch.rand(2, 15, 8, 8, generator=g, dtype=torch.float64) for _ in range(2))
    recon = tuple(p + 2.0 for p in pred)
    offset = torch.tensor([0.0, 3.0, 4.0], dtype=torch.float64)
    total = loss_3d(pose, pose + offset, pred, recon, config)
    assert float(total) == pytest.approx(5.0 + 0.5 * 4.0 + 0.5 * 4.0, abs=1e-12)


def test_build_seeded():
    a = build_pose3d(MINI, seed=1)
    b = build_pose3d(MINI, seed=1)
    c = build_pose3d(MINI, seed=2)
    sa, sb, sc = a.state_dict(), b.state_dict(), c.state_dict()
    assert all(torch.equal(sa[k], sb[k]) for k in sa)
    assert any(not torch.equal(sa[k], sc[k]) for k in sa)
