"""
Shared fixtures.
"""

import numpy as np
import pytest

from shared.config import load_config
from spmamba.autodiff import precision
from spmamba.data import build_dataset


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def float64():
    """Run the test body in 64-bit mode."""
    with precision(64):
        yield


@pytest.fixture
def micro_config():
    return load_config(preset="micro")


@pytest.fixture
def micro_config64():
    return load_config(preset="micro", overrides={"precision": 64})


@pytest.fixture
def toy_config():
    return load_config(preset="toy")


@pytest.fixture
def tiny_dataset(tmp_path, micro_config):
    """4 train normals, 2 test normals and 2 test abnormals at 64x64."""
    root = tmp_path / "data"
    manifest = build_dataset(micro_config.synth, str(root), micro_config.seed, 4, 2, 2)
    return manifest
