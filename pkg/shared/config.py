"""
Shared configuration utilities.

Settings are layered: built-in defaults, environment variables (``SPMAMBA_``
prefix, ``__`` for nested keys), a preset, a YAML file, then explicit
overrides coming from the command line.
"""

import copy
import hashlib
import json
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import yaml
from pydantic import BaseModel, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .errors import ConfigError
from .models import Preset

# Find project root (parent of shared directory)
PROJECT_ROOT = Path(__file__).parent.parent
ENV_FILE = PROJECT_ROOT / ".env"


class ModelSettings(BaseModel):
    """Geometry of encoder, fusion, prototype module and decoder."""

    input_size: int = 256
    stem_channels: int = 16
    channels: Tuple[int, int, int] = (32, 64, 128)
    fused_channels: int = 64
    depths: Tuple[int, int, int, int] = (3, 4, 6, 3)
    state_dim: int = 16
    expansion: int = 2
    conv1d_kernel: int = 4
    conv_branch_reduction: int = 4
    directions: List[int] = list(range(8))
    num_prototypes: int = 10
    window: int = 3

    @field_validator("input_size")
    @classmethod
    def _input_size(cls, value: int) -> int:
        # stride-16 grid must hold a 4x4 scan grid with a power-of-two center
        if value < 64 or value % 16 or (value // 32) & (value // 32 - 1):
            raise ValueError("input_size must be 64 * 2^k (stride-16 grid >= 4 with power-of-two half)")
        return value

    @field_validator("directions")
    @classmethod
    def _directions(cls, value: List[int]) -> List[int]:
        if not value:
            raise ValueError("direction set must be non-empty")
        if len(set(value)) != len(value) or any(d < 0 or d > 7 for d in value):
            raise ValueError("directions must be distinct integers in 0..7")
        return value

    @field_validator("window")
    @classmethod
    def _window(cls, value: int) -> int:
        if value < 1 or value % 2 == 0:
            raise ValueError("window side p must be a positive odd integer")
        return value

    @field_validator("num_prototypes", "state_dim", "expansion", "conv1d_kernel", "conv_branch_reduction", "stem_channels", "fused_channels")
    @classmethod
    def _positive(cls, value: int) -> int:
        if value < 1:
            raise ValueError("must be >= 1")
        return value

    @field_validator("depths")
    @classmethod
    def _depths(cls, value: Tuple[int, int, int, int]) -> Tuple[int, int, int, int]:
        if any(d < 1 for d in value):
            raise ValueError("every decoder stage needs at least one block")
        return value


class ScoringSettings(BaseModel):
    """Anomaly-score weights and filter widths."""

    alpha: float = 1.0
    beta: float = -0.025
    gamma: float = 400.0
    sigma: float = 0.6
    k_sigma: float = 1.2
    smoothing_sigma: float = 4.0

    @model_validator(mode="after")
    def _widths(self) -> "ScoringSettings":
        if self.sigma <= 0 or self.k_sigma <= self.sigma:
            raise ValueError("require sigma > 0 and k_sigma > sigma")
        if self.smoothing_sigma < 0:
            raise ValueError("smoothing_sigma must be >= 0")
        return self


class TrainSettings(BaseModel):
    """Optimization settings."""

    epsilon: float = 25.0
    learning_rate: float = 0.005
    weight_decay: float = 1e-4
    batch_size: int = 16
    epochs: int = 10
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8

    @field_validator("epsilon", "weight_decay")
    @classmethod
    def _non_negative(cls, value: float) -> float:
        if value < 0:
            raise ValueError("must be >= 0")
        return value

    @field_validator("learning_rate")
    @classmethod
    def _lr(cls, value: float) -> float:
        if value <= 0:
            raise ValueError("learning rate must be > 0")
        return value

    @field_validator("batch_size", "epochs")
    @classmethod
    def _at_least_one(cls, value: int) -> int:
        if value < 1:
            raise ValueError("must be >= 1")
        return value


class SynthSettings(BaseModel):
    """Pseudo-radiograph generator settings."""

    image_size: int = 256
    lung_intensity: Tuple[float, float] = (0.18, 0.28)
    spine_intensity: Tuple[float, float] = (0.82, 0.92)
    body_intensity: Tuple[float, float] = (0.52, 0.6)
    background_intensity: float = 0.05
    max_displacement: float = 0.05
    noise_std: float = 0.02
    lesion_area: Tuple[float, float] = (0.04, 0.12)
    lesion_delta: Tuple[float, float] = (0.15, 0.4)

    @model_validator(mode="after")
    def _ranges(self) -> "SynthSettings":
        for name in ("lung_intensity", "spine_intensity", "body_intensity", "lesion_area", "lesion_delta"):
            low, high = getattr(self, name)
            if not low <= high:
                raise ValueError(f"{name} must be a non-empty range")
        if not 0 <= self.max_displacement < 0.25:
            raise ValueError("max_displacement must be in [0, 0.25) of the image size")
        if self.lesion_area[0] <= 0 or self.lesion_area[1] >= 0.15:
            raise ValueError("lesion_area must lie in (0, 0.15) so lesions fit inside a lung field")
        if self.image_size < 32:
            raise ValueError("image_size must be >= 32")
        return self


class PipelineConfig(BaseSettings):
    """Root configuration for every command."""

    model_config = SettingsConfigDict(
        env_prefix="SPMAMBA_",
        env_nested_delimiter="__",
        env_file=str(ENV_FILE),
        env_file_encoding="utf-8",
        extra="ignore",
        case_sensitive=False,
    )

    seed: int = 0
    preset: Preset = Preset.PAPER_SHAPE
    precision: int = 32

    # Logging
    log_level: str = "INFO"
    log_file: Optional[str] = None

    model: ModelSettings = ModelSettings()
    scoring: ScoringSettings = ScoringSettings()
    train: TrainSettings = TrainSettings()
    synth: SynthSettings = SynthSettings()

    @field_validator("precision")
    @classmethod
    def _precision(cls, value: int) -> int:
        if value not in (32, 64):
            raise ValueError("precision must be 32 or 64")
        return value


PRESETS: Dict[Preset, Dict[str, Any]] = {
    Preset.PAPER_SHAPE: {},
    Preset.TOY: {
        "model": {"input_size": 64, "depths": [1, 1, 1, 1], "state_dim": 4},
        "train": {"batch_size": 8},
        "synth": {"image_size": 64},
    },
    Preset.MICRO: {
        "model": {
            "input_size": 64,
            "stem_channels": 4,
            "channels": [4, 4, 4],
            "fused_channels": 4,
            "depths": [1, 1, 1, 1],
            "state_dim": 2,
            "conv_branch_reduction": 2,
            "num_prototypes": 2,
        },
        "train": {"batch_size": 2},
        "synth": {"image_size": 64},
    },
}


def load_yaml_config(config_path: str) -> Dict[str, Any]:
    """Load configuration from a YAML file."""
    if not os.path.exists(config_path):
        raise ConfigError(f"config file not found: {config_path}")

    try:
        with open(config_path, 'r') as f:
            data = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"invalid YAML in {config_path}: {e}") from e

    if not isinstance(data, dict):
        raise ConfigError(f"{config_path}: top level must be a mapping")
    return data


def set_config_value(config: Dict[str, Any], key: str, value: Any) -> None:
    """Set a configuration value using dot notation (e.g., 'train.epochs')."""
    keys = key.split('.')
    current = config
    for k in keys[:-1]:
        if not isinstance(current.get(k), dict):
            current[k] = {}
        current = current[k]
    current[keys[-1]] = value


def deep_merge(base: Dict[str, Any], update: Dict[str, Any]) -> Dict[str, Any]:
    """Recursively merge ``update`` into a copy of ``base``."""
    merged = copy.deepcopy(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def parse_override(text: str) -> Tuple[str, Any]:
    """Parse ``key.path=value``; the value is read as YAML (numbers, lists, bools)."""
    if '=' not in text:
        raise ConfigError(f"invalid override '{text}', expected key=value")
    key, raw = text.split('=', 1)
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError:
        value = raw
    return key.strip(), value


def load_config(
    config_path: Optional[str] = None,
    preset: Optional[str] = None,
    overrides: Optional[Dict[str, Any]] = None,
) -> PipelineConfig:
    """
    Build a validated ``PipelineConfig``.

    Args:
        config_path: optional YAML file
        preset: preset name overriding the file's ``preset`` key
        overrides: dot-notation keys applied last (e.g. ``{"train.epochs": 3}``)
    """
    file_values = load_yaml_config(config_path) if config_path else {}

    explicit: Dict[str, Any] = {}
    for key, value in (overrides or {}).items():
        set_config_value(explicit, key, value)

    preset_name = preset or explicit.get("preset") or file_values.get("preset") or Preset.PAPER_SHAPE.value
    try:
        preset_enum = Preset(preset_name)
    except ValueError as e:
        raise ConfigError(f"unknown preset '{preset_name}' (choose from {[p.value for p in Preset]})") from e

    values = deep_merge(PRESETS[preset_enum], file_values)
    values = deep_merge(values, explicit)
    values["preset"] = preset_enum.value

    # Sections given explicitly win over environment values
    try:
        return PipelineConfig(**values)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first.get("loc", ()))
        raise ConfigError(f"invalid config value for '{location}': {first.get('msg')}") from e


def config_snapshot(config: PipelineConfig) -> Dict[str, Any]:
    """JSON-compatible dump of a config."""
    return json.loads(config.model_dump_json())


def config_hash(config: PipelineConfig) -> str:
    """SHA-256 over the canonical JSON dump."""
    canonical = json.dumps(config_snapshot(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def config_from_snapshot(snapshot: Dict[str, Any]) -> PipelineConfig:
    """Rebuild a config stored in a checkpoint or run manifest."""
    try:
        return PipelineConfig(**snapshot)
    except ValidationError as e:
        raise ConfigError(f"stored config is invalid: {e.errors()[0].get('msg')}") from e
