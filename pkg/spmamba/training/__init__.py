"""
Loss, optimizer, checkpoints and the training loop.
"""

from .checkpoint import FORMAT_VERSION, load_checkpoint, save_checkpoint
from .gradcheck import grad_check, seed_bank
from .loss import LossTerms, loss
from .optim import AdamW, AdamWState, ParamGroup, adamw_step, parameter_groups
from .trainer import LAST_CHECKPOINT, METRICS_FILE, Trainer, TrainResult, epoch_permutation, load_model

__all__ = [
    "AdamW",
    "AdamWState",
    "FORMAT_VERSION",
    "LAST_CHECKPOINT",
    "LossTerms",
    "METRICS_FILE",
    "ParamGroup",
    "TrainResult",
    "Trainer",
    "adamw_step",
    "epoch_permutation",
    "grad_check",
    "load_checkpoint",
    "load_model",
    "loss",
    "parameter_groups",
    "save_checkpoint",
    "seed_bank",
]
