"""
Training loop with per-epoch checkpoints and exact resumption.
"""

import json
import math
import os
import shutil
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from shared.config import PipelineConfig, config_from_snapshot, config_hash, config_snapshot
from shared.errors import CheckpointError, DatasetError, TrainingAbortedError
from shared.logging_config import get_logger, log_epoch_summary, log_training_step
from shared.models import EpochRecord, StepRecord

from ..autodiff import Stream, Tape, Tensor, backward, generator, no_tape, precision
from ..model import SPMamba, build_model
from .checkpoint import load_checkpoint, save_checkpoint
from .loss import loss
from .optim import AdamW

logger = get_logger(__name__)

METRICS_FILE = "metrics.jsonl"
LAST_CHECKPOINT = "last.ckpt"


def epoch_permutation(seed: int, epoch: int, count: int) -> np.ndarray:
    """Sample order for one epoch, a pure function of (seed, epoch)."""
    return generator(seed, Stream.SHUFFLE, epoch).permutation(count)


def checkpoint_name(epoch: int) -> str:
    return f"epoch_{epoch:04d}.ckpt"


def model_tensors(tensors: Dict[str, np.ndarray]) -> Dict[str, np.ndarray]:
    return {name[len("model/"):]: arr for name, arr in tensors.items() if name.startswith("model/")}


def _resume_key(snapshot: Dict[str, Any]) -> Dict[str, Any]:
    # epoch count and logging may change between a run and its resumption
    key = json.loads(json.dumps(snapshot))
    key.get("train", {}).pop("epochs", None)
    key.pop("log_level", None)
    key.pop("log_file", None)
    return key


@dataclass
class TrainResult:
    model: SPMamba
    checkpoint: str
    epochs: List[EpochRecord] = field(default_factory=list)
    steps: int = 0


def load_model(path: str) -> Tuple[SPMamba, PipelineConfig, Dict[str, Any]]:
    """Rebuild the model stored in a checkpoint."""
    header, tensors = load_checkpoint(path)
    if "config" not in header:
        raise CheckpointError(f"{path}: header has no config snapshot")
    config = config_from_snapshot(header["config"])
    with precision(config.precision):
        model = build_model(config)
        model.load_state_dict(model_tensors(tensors))
    return model, config, header


class Trainer:
    """
    Fits a model on normal images.

    Args:
        config: pipeline configuration (seed, precision, train/model sections)
        images: (N, H, W) training images in [0, 1]
        run_dir: where checkpoints and ``metrics.jsonl`` go
    """

    def __init__(self, config: PipelineConfig, images: np.ndarray, run_dir: str):
        images = np.asarray(images)
        if images.ndim != 3 or images.shape[0] == 0:
            raise DatasetError("training needs a non-empty (N, H, W) image array")
        size = config.model.input_size
        if images.shape[1:] != (size, size):
            raise DatasetError(f"training images are {images.shape[1:]}, model expects {size}x{size}")

        self.config = config
        self.images = images
        self.run_dir = run_dir
        self.metrics_path = os.path.join(run_dir, METRICS_FILE)
        self.last_checkpoint: Optional[str] = None
        os.makedirs(run_dir, exist_ok=True)

    def _batches(self, epoch: int):
        order = epoch_permutation(self.config.seed, epoch, len(self.images))
        size = self.config.train.batch_size
        for start in range(0, len(order), size):
            yield self.images[order[start:start + size]]

    def _init_prototypes(self, model: SPMamba) -> None:
        k = model.prototypes.num_prototypes
        if len(self.images) < k:
            raise DatasetError(f"need at least {k} training images to seed {k} prototypes, got {len(self.images)}")
        wanted = math.ceil(k / self.config.train.batch_size)
        features = []
        with no_tape():
            for i, batch in enumerate(self._batches(0)):
                if i >= wanted:
                    break
                features.append(model.fuse(Tensor(batch)).data)
        model.prototypes.load_samples(np.concatenate(features), self.config.seed)
        logger.info("Prototypes initialized", prototypes=k, samples=sum(len(f) for f in features))

    def _write(self, record) -> None:
        with open(self.metrics_path, "a") as f:
            f.write(record.model_dump_json() + "\n")

    def _truncate_metrics(self, completed_epochs: int) -> None:
        """Keep only records of epochs already covered by the resumed checkpoint."""
        if not os.path.exists(self.metrics_path):
            return
        with open(self.metrics_path) as f:
            kept = [line for line in f if line.strip() and json.loads(line)["epoch"] < completed_epochs]
        with open(self.metrics_path, "w") as f:
            f.writelines(kept)

    def _save(self, model: SPMamba, optimizer: AdamW, epoch: int) -> str:
        tensors = {f"model/{name}": arr for name, arr in model.state_dict().items()}
        tensors.update(optimizer.state_arrays())
        header = {
            "config": config_snapshot(self.config),
            "config_hash": config_hash(self.config),
            "epoch": epoch,
            "step": optimizer.step_count,
            "optimizer_steps": optimizer.steps(),
            "rng": {"seed": self.config.seed, "stream": int(Stream.SHUFFLE), "next_epoch": epoch},
            "parameter_count": model.num_parameters(),
        }
        path = save_checkpoint(os.path.join(self.run_dir, checkpoint_name(epoch)), header, tensors)
        last = os.path.join(self.run_dir, LAST_CHECKPOINT)
        tmp = last + ".tmp"
        shutil.copyfile(path, tmp)
        os.replace(tmp, last)
        self.last_checkpoint = path
        return path

    def train(self, epochs: Optional[int] = None, resume: Optional[str] = None) -> TrainResult:
        """
        Run epochs ``[start, epochs)``; ``start`` is 0 or the resumed checkpoint's epoch count.

        Raises:
            TrainingAbortedError: the loss became non-finite
        """
        total_epochs = epochs if epochs is not None else self.config.train.epochs
        settings = self.config.train
        size = self.config.model.input_size

        with precision(self.config.precision):
            model = build_model(self.config)
            optimizer = AdamW.from_settings(model, settings)

            if resume:
                header, tensors = load_checkpoint(resume)
                if _resume_key(header.get("config", {})) != _resume_key(config_snapshot(self.config)):
                    raise CheckpointError(f"{resume} was written with a different configuration")
                model.load_state_dict(model_tensors(tensors))
                optimizer.load_state(header.get("optimizer_steps", {}), tensors)
                start = int(header["epoch"])
                self.last_checkpoint = resume
                self._truncate_metrics(start)
                logger.info("Resumed training", checkpoint=resume, epoch=start, step=optimizer.step_count)
            else:
                start = 0
                if os.path.exists(self.metrics_path):
                    os.remove(self.metrics_path)
                self._init_prototypes(model)

            result = TrainResult(model=model, checkpoint=self.last_checkpoint or "")
            step = optimizer.step_count
            for epoch in range(start, total_epochs):
                losses, mses, distances = [], [], []
                for batch in self._batches(epoch):
                    with Tape() as tape:
                        out = model(Tensor(batch))
                        terms = loss(out.original, out.reconstructed, out.distance, settings.epsilon, size)
                    value = terms.value
                    if not math.isfinite(value):
                        raise TrainingAbortedError(
                            f"non-finite loss at epoch {epoch} step {step + 1}", self.last_checkpoint
                        )
                    backward(tape, terms.total, leaves=model.parameters())
                    optimizer.step()
                    optimizer.zero_grad()
                    step += 1

                    losses.append(value)
                    mses.append(sum(terms.mse))
                    distances.append(terms.distance)
                    log_training_step(logger, epoch, step, value, terms.mse, terms.distance)
                    self._write(StepRecord(epoch=epoch, step=step, loss=value, mse=terms.mse, distance=terms.distance))

                path = self._save(model, optimizer, epoch + 1)
                record = EpochRecord(
                    epoch=epoch,
                    steps=len(losses),
                    mean_loss=float(np.mean(losses)),
                    mean_mse=float(np.mean(mses)),
                    mean_distance=float(np.mean(distances)),
                    checkpoint=os.path.basename(path),
                )
                self._write(record)
                log_epoch_summary(logger, epoch, len(losses), record.mean_loss, path)
                result.epochs.append(record)

            result.checkpoint = self.last_checkpoint or ""
            result.steps = step
        return result
