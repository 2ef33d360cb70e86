"""Shared fixtures: one micro dataset reused by data/training/CLI tests."""

import numpy as np
import pytest

from stereopose.camera import RigConfig
from stereopose.datagen import GenConfig, build_dataset
from stereopose.skeleton import build_topology

MICRO_CATEGORIES = (
    "standing_whole_body",
    "boxing",
    "crouching_normal",
    "dancing",
)


@pytest.fixture(scope="session")
def topology():
    return build_topology()


@pytest.fixture(scope="session")
def rig():
    return RigConfig().rig()


@pytest.fixture(scope="session")
def micro_config():
    return GenConfig(
        n_motions=4,
        categories=MICRO_CATEGORIES,
        split_ratios=(0.5, 0.25, 0.25),
        duration_range=(0.2, 0.3),
        n_characters=2,
        seed=5,
    )


@pytest.fixture(scope="session")
def micro_root(tmp_path_factory, micro_config):
    """A 4-motion dataset with train/val/test splits (a few seconds to build)."""
    root = tmp_path_factory.mktemp("micro_ds")
    build_dataset(root, micro_config)
    return root


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
