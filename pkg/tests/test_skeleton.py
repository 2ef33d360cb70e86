import numpy as np
import pytest

from stereopose.skeleton import (
    HEATMAP_SIZE,
    JOINT_NAMES,
    NUM_HEATMAP_JOINTS,
    NUM_JOINTS,
    Keypoints2D,
    Pose3D,
    build_topology,
    validate_heatmap_stack,
)


def test_joint_order_and_counts():
    assert len(JOINT_NAMES) == NUM_JOINTS == 16
    assert NUM_HEATMAP_JOINTS == 15
    assert HEATMAP_SIZE == 64
    assert JOINT_NAMES[0] == "head"
    assert JOINT_NAMES[1] == "neck"
    # left chain before right chain, proximal to distal
    left = [n for n in JOINT_NAMES if n.startswith("left_")]
    right = [n for n in JOINT_NAMES if n.startswith("right_")]
    assert left == [
        "left_upper_arm", "left_lower_arm", "left_hand",
        "left_thigh", "left_calf", "left_foot", "left_ball_of_foot",
    ]
    assert right == [n.replace("left_", "right_") for n in left]
    assert JOINT_NAMES.index(left[0]) < JOINT_NAMES.index(right[0])


def test_topology_tree(topology):
    assert topology.num_joints == 16
    assert topology.num_bones == 15
    assert topology.parent_index[topology.index("neck")] == -1
    assert sum(1 for p in topology.parent_index if p == -1) == 1
    # every parent index refers to an earlier-declared valid joint
    for j, p in enumerate(topology.parent_index):
        if p >= 0:
            assert 0 <= p < 16 and p != j
    # walking parents always terminates at the root
    for j in range(16):
        seen, k = set(), j
        while topology.parent_index[k] >= 0:
            assert k not in seen
            seen.add(k)
            k = topology.parent_index[k]
        assert k == topology.index("neck")


def test_heatmap_subset_excludes_head(topology):
    assert len(topology.heatmap_subset) == 15
    assert topology.index("head") not in topology.heatmap_subset
    assert list(topology.heatmap_subset) == sorted(topology.heatmap_subset)


def test_bones_match_parent_index(topology):
    for parent, child in topology.bones:
        assert topology.parent_index[child] == parent


def test_checksum_stable(topology):
    assert topology.checksum() == build_topology().checksum()
    assert len(topology.checksum()) == 64


def test_pose3d_validation():
    coords = np.zeros((16, 3))
    pose = Pose3D(coords=coords, frame="world")
    assert pose.coords.flags.writeable is False
    assert pose.coords.dtype == np.float64
    with pytest.raises(ValueError):
        Pose3D(coords=np.zeros((15, 3)), frame="world")
    with pytest.raises(ValueError):
        Pose3D(coords=np.full((16, 3), np.nan), frame="world")
    with pytest.raises(ValueError):
        Pose3D(coords=coords, frame="banana")


def test_bone_vectors_and_lengths(topology):
    coords = np.zeros((16, 3))
    # place the head 12 cm above the neck; a single nonzero bone
    coords[topology.index("head")] = (0.0, 0.0, 12.0)
    pose = Pose3D(coords=coords, frame="world")
    vecs = pose.bone_vectors(topology)
    lens = pose.bone_lengths(topology)
    assert vecs.shape == (15, 3)
    head_bone = [k for k, (p, c) in enumerate(topology.bones)
                 if c == topology.index("head")][0]
    assert np.allclose(vecs[head_bone], (0.0, 0.0, 12.0))
    assert lens[head_bone] == pytest.approx(12.0)
    assert np.count_nonzero(lens) == 1


def test_keypoints_validation():
    kps = Keypoints2D(coords=np.zeros((15, 2)), visible=np.ones(15, bool))
    assert kps.coords.shape == (15, 2)
    with pytest.raises(ValueError):
        Keypoints2D(coords=np.zeros((16, 2)), visible=np.ones(16, bool))
    with pytest.raises(ValueError):
        Keypoints2D(coords=np.zeros((15, 2)), visible=np.ones(14, bool))


def test_validate_heatmap_stack():
    validate_heatmap_stack(np.zeros((15, 64, 64), dtype=np.float32))
    with pytest.raises(ValueError):
        validate_heatmap_stack(np.zeros((15, 32, 64)))
    with pytest.raises(ValueError):
        validate_heatmap_stack(np.full((15, 64, 64), np.inf))
