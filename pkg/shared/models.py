"""
Shared records and enums for the SP-Mamba pipeline.

Everything written to disk as line-delimited JSON (manifests, metric logs,
reports) is one of these models.
"""

from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, Field


class Preset(str, Enum):
    PAPER_SHAPE = "paper-shape"
    TOY = "toy"
    MICRO = "micro"


class Split(str, Enum):
    TRAIN = "train"
    TEST = "test"


class PyramidRole(str, Enum):
    ORIGINAL = "original"
    RECONSTRUCTED = "reconstructed"


# Scoring
class ScoreBreakdown(BaseModel):
    """Four-part image score and the weights that combined it."""
    s_org: float
    s_pdist: float
    s_concen: float
    s_contra: float
    alpha: float
    beta: float
    gamma: float
    s_total: float

    @classmethod
    def compose(
        cls,
        s_org: float,
        s_pdist: float,
        s_concen: float,
        s_contra: float,
        alpha: float,
        beta: float,
        gamma: float,
    ) -> "ScoreBreakdown":
        total = s_org + alpha * s_pdist + beta * s_concen + gamma * s_contra
        return cls(
            s_org=s_org, s_pdist=s_pdist, s_concen=s_concen, s_contra=s_contra,
            alpha=alpha, beta=beta, gamma=gamma, s_total=total,
        )

    def reweighted(self, alpha: float, beta: float, gamma: float) -> "ScoreBreakdown":
        return ScoreBreakdown.compose(
            self.s_org, self.s_pdist, self.s_concen, self.s_contra, alpha, beta, gamma
        )


# Dataset
class DatasetManifestHeader(BaseModel):
    kind: str = "header"
    seed: int
    image_size: int
    counts: Dict[str, int]
    synth: Dict[str, Any]


class ManifestEntry(BaseModel):
    kind: str = "image"
    split: Split
    path: str
    label: int = Field(ge=0, le=1)
    mask_path: Optional[str] = None
    seed: int
    index: int


# Training
class StepRecord(BaseModel):
    kind: str = "step"
    epoch: int
    step: int
    loss: float
    mse: List[float]
    distance: float


class EpochRecord(BaseModel):
    kind: str = "epoch"
    epoch: int
    steps: int
    mean_loss: float
    mean_mse: float
    mean_distance: float
    checkpoint: str


class GradCheckEntry(BaseModel):
    name: str
    index: Tuple[int, ...]
    analytic: float
    numeric: float
    relative_error: float


class GradCheckReport(BaseModel):
    coordinates: int
    max_relative_error: float
    tolerance: float
    passed: bool
    loss: float
    worst: List[GradCheckEntry]


class BenchRow(BaseModel):
    length: int
    median_ns: int


# Evaluation
class ImageScoreRecord(BaseModel):
    path: str
    label: int
    scores: ScoreBreakdown


class SweepRecord(BaseModel):
    alpha: float
    beta: float
    gamma: float
    auroc: float


class EvalReport(BaseModel):
    image_auroc: float
    image_ap: float
    image_f1: float
    image_acc: float
    threshold: float
    pixel_auroc: float
    pixel_ap: float
    pixel_f1: float
    mad: float
    component_auroc: Dict[str, float]
    ablation: Dict[str, float]
    images: List[ImageScoreRecord]
    config_hash: str


class RunManifest(BaseModel):
    command: str
    seed: int
    preset: Preset
    precision: int
    config_hash: str
    config: Dict[str, Any]
    versions: Dict[str, str]
    outputs: Dict[str, Any] = Field(default_factory=dict)
