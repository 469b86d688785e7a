"""
Tests for configuration loading, presets and overrides.
"""

import pytest

from shared.config import (
    config_from_snapshot,
    config_hash,
    config_snapshot,
    load_config,
    parse_override,
)
from shared.errors import ConfigError
from shared.models import Preset


class TestDefaults:
    def test_full_size_defaults(self):
        config = load_config()
        assert config.preset == Preset.PAPER_SHAPE
        assert config.precision == 32
        assert config.model.input_size == 256
        assert config.model.depths == (3, 4, 6, 3)
        assert config.model.state_dim == 16
        assert config.model.num_prototypes == 10
        assert config.model.window == 3
        assert config.model.directions == list(range(8))

    def test_scoring_and_training(self):
        config = load_config()
        assert (config.scoring.alpha, config.scoring.beta, config.scoring.gamma) == (1.0, -0.025, 400.0)
        assert (config.scoring.sigma, config.scoring.k_sigma) == (0.6, 1.2)
        assert config.scoring.smoothing_sigma == 4.0
        assert config.train.epsilon == 25.0
        assert config.train.learning_rate == 0.005
        assert config.train.weight_decay == 1e-4
        assert config.train.batch_size == 16
        assert config.train.epochs == 10


class TestPresets:
    def test_toy(self, toy_config):
        assert toy_config.preset == Preset.TOY
        assert toy_config.model.input_size == 64
        assert toy_config.model.depths == (1, 1, 1, 1)
        assert toy_config.model.state_dim == 4
        assert toy_config.train.batch_size == 8
        assert toy_config.synth.image_size == 64

    def test_micro(self, micro_config):
        assert micro_config.model.channels == (4, 4, 4)
        assert micro_config.model.fused_channels == 4
        assert micro_config.model.num_prototypes == 2
        assert micro_config.train.batch_size == 2

    def test_unknown_preset(self):
        with pytest.raises(ConfigError, match="unknown preset"):
            load_config(preset="huge")

    def test_preset_from_overrides(self):
        assert load_config(overrides={"preset": "toy"}).preset == Preset.TOY


class TestOverrides:
    def test_dot_notation(self):
        config = load_config(preset="toy", overrides={"train.epochs": 3, "scoring.gamma": 10.0})
        assert config.train.epochs == 3
        assert config.scoring.gamma == 10.0
        assert config.model.input_size == 64

    @pytest.mark.parametrize("text,expected", [
        ("train.epochs=3", ("train.epochs", 3)),
        ("scoring.beta=-0.5", ("scoring.beta", -0.5)),
        ("model.directions=[0, 1]", ("model.directions", [0, 1])),
        ("log_level=DEBUG", ("log_level", "DEBUG")),
    ])
    def test_parse(self, text, expected):
        assert parse_override(text) == expected

    def test_parse_needs_equals(self):
        with pytest.raises(ConfigError):
            parse_override("train.epochs")

    @pytest.mark.parametrize("overrides", [
        {"model.window": 2},
        {"precision": 16},
        {"model.input_size": 100},
        {"scoring.k_sigma": 0.5},
        {"model.directions": []},
        {"model.directions": [0, 8]},
        {"train.learning_rate": 0.0},
        {"synth.lesion_area": [0.1, 0.3]},
    ])
    def test_invalid_values(self, overrides):
        with pytest.raises(ConfigError):
            load_config(overrides=overrides)


class TestYamlFile:
    def test_file_values(self, tmp_path):
        path = tmp_path / "spmamba.yaml"
        path.write_text("preset: toy\nseed: 7\ntrain:\n  epochs: 2\n")
        config = load_config(str(path))
        assert config.preset == Preset.TOY
        assert config.seed == 7
        assert config.train.epochs == 2

    def test_overrides_beat_file(self, tmp_path):
        path = tmp_path / "spmamba.yaml"
        path.write_text("train:\n  epochs: 2\n")
        assert load_config(str(path), overrides={"train.epochs": 5}).train.epochs == 5

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_config(str(tmp_path / "nope.yaml"))

    def test_not_a_mapping(self, tmp_path):
        path = tmp_path / "list.yaml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(ConfigError):
            load_config(str(path))


class TestHash:
    def test_stable(self):
        assert config_hash(load_config(preset="toy")) == config_hash(load_config(preset="toy"))

    def test_changes_with_seed(self):
        assert config_hash(load_config(preset="toy")) != config_hash(load_config(preset="toy", overrides={"seed": 1}))

    def test_snapshot_round_trip(self, micro_config):
        restored = config_from_snapshot(config_snapshot(micro_config))
        assert restored == micro_config
        assert config_hash(restored) == config_hash(micro_config)

    def test_invalid_snapshot(self, micro_config):
        snapshot = config_snapshot(micro_config)
        snapshot["precision"] = 8
        with pytest.raises(ConfigError):
            config_from_snapshot(snapshot)
