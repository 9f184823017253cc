"""Adam, the fitting step and autoencoder pretraining."""

from .adam import AdamState, adam_step, check_schedule, clip_by_global_norm, global_norm
from .fitting import FitConfig, FitResult, Segment, fit_mixture, fit_segmented, plan_segments
from .pretrain import PretrainResult, TrainingClip, prepare_clip, pretrain, reconstruction_loss

__all__ = [
    "AdamState",
    "FitConfig",
    "FitResult",
    "PretrainResult",
    "Segment",
    "TrainingClip",
    "adam_step",
    "check_schedule",
    "clip_by_global_norm",
    "fit_mixture",
    "fit_segmented",
    "global_norm",
    "plan_segments",
    "prepare_clip",
    "pretrain",
    "reconstruction_loss",
]
