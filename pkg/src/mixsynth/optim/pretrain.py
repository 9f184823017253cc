"""Autoencoder pretraining of one source synthesizer on monophonic clips."""

import logging
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from ..core.errors import NonFiniteGradientError, ValidationError
from ..core.utils import PerformanceTracker, n_frames
from ..dsp.framing import AudioLike, as_samples
from ..dsp.loudness import a_weighted_loudness
from ..dsp.pitch import estimate_f0
from ..dsp.spectral import StftConfig
from ..grad.graph import DiffGraph, DiffValue
from ..mixture.loss import spectral_loss
from ..nets.model import SynthModel, decode_op, encode_timbre_op, encoder_features
from ..synth import FrameGrid, synthesize
from .adam import AdamState, adam_step, clip_by_global_norm

logger = logging.getLogger(__name__)

# Autocorrelation needs frames longer than the lowest period searched.
PITCH_FRAME_MS = 64.0


@dataclass
class TrainingClip:
    """Audio with its framewise f0, loudness and encoder features."""

    audio: np.ndarray
    f0: np.ndarray
    loudness: np.ndarray
    features: np.ndarray
    name: str = ""


def prepare_clip(
    audio: AudioLike,
    model: SynthModel,
    f0: Optional[np.ndarray] = None,
    clip_samples: Optional[int] = None,
    name: str = "",
) -> TrainingClip:
    """Zero-pad audio to clip_samples and derive the per-frame conditioning.

    A missing f0 reference is estimated by autocorrelation. A reference
    shorter than the padded frame count is extended with its last value.
    """
    samples = as_samples(audio)
    if clip_samples is not None and samples.shape[0] < clip_samples:
        samples = np.concatenate([samples, np.zeros(clip_samples - samples.shape[0])])
    config = model.config
    frames = n_frames(samples.shape[0], model.hop)
    if f0 is None:
        frame_ms = max(config.frame_ms, PITCH_FRAME_MS)
        f0 = estimate_f0(samples, hop_ms=config.hop_ms, frame_ms=frame_ms).f0
        logger.debug("Estimated f0 for clip %s", name or "<unnamed>")
    f0 = np.asarray(f0, dtype=np.float64).reshape(-1)
    if f0.shape[0] == 0:
        raise ValidationError(f"clip {name}: empty f0 reference")
    if f0.shape[0] < frames:
        f0 = np.concatenate([f0, np.full(frames - f0.shape[0], f0[-1])])
    loudness = a_weighted_loudness(samples, hop_ms=config.hop_ms, frame_ms=config.frame_ms)
    return TrainingClip(
        audio=samples,
        f0=f0[:frames],
        loudness=loudness,
        features=encoder_features(samples, config),
        name=name,
    )


@dataclass
class PretrainResult:
    model: SynthModel
    epoch_losses: list[float] = field(default_factory=list)


def reconstruction_loss(
    clip: TrainingClip, model: SynthModel, stft: Optional[StftConfig] = None, seed: int = 0
) -> float:
    """Spectral loss between a clip and the model's reconstruction of it."""
    graph = DiffGraph()
    loss = _clip_loss(graph, clip, model, model.bind(graph), stft, seed)
    return loss.item()


def _clip_loss(
    graph: DiffGraph,
    clip: TrainingClip,
    model: SynthModel,
    weights: Mapping[str, DiffValue],
    stft: Optional[StftConfig],
    seed: int,
) -> DiffValue:
    z = encode_timbre_op(clip.features, weights, graph)
    f0 = graph.constant(clip.f0)
    controls = decode_op(f0, z, graph.constant(clip.loudness), weights, model.config)
    grid = FrameGrid.from_config(model.config)
    audio = synthesize(f0, controls, model.reverb(weights), clip.audio.shape[0], seed, grid)
    return spectral_loss(clip.audio, audio, stft)


def pretrain(
    dataset: Sequence[Union[TrainingClip, tuple[AudioLike, Optional[np.ndarray]]]],
    model: SynthModel,
    epochs: int = 3000,
    lr: float = 0.001,
    clip_norm: float = 100.0,
    stft: Optional[StftConfig] = None,
    seed: int = 0,
    log_every: int = 10,
) -> PretrainResult:
    """Train encoder, decoder (and reverb if enabled) on whole clips, one at a time.

    The input model is left untouched; a trained copy is returned with the
    mean loss of every epoch.
    """
    if not dataset:
        raise ValidationError("pretraining dataset is empty", "point --data at a folder of WAVs")
    if epochs <= 0 or lr <= 0:
        raise ValidationError(f"epochs and lr must be positive, got {epochs} / {lr}")
    clips = [
        item if isinstance(item, TrainingClip) else prepare_clip(item[0], model, item[1])
        for item in dataset
    ]
    trained = model.copy()
    adam = AdamState(schedule=[(0, lr)])
    tracker = PerformanceTracker()
    epoch_losses: list[float] = []

    for epoch in range(epochs):
        losses = []
        for index, clip in enumerate(clips):
            tracker.start("step")
            graph = DiffGraph()
            weights = trained.bind(graph, trainable=True)
            loss = _clip_loss(graph, clip, trained, weights, stft, seed + index)
            graph.backward(loss)
            grads = {name: leaf.grad for name, leaf in weights.items()}
            for name, grad in grads.items():
                if not np.all(np.isfinite(grad)):
                    raise NonFiniteGradientError(adam.step, name)
            grads = clip_by_global_norm(grads, clip_norm)
            trained.weights = adam_step(trained.weights, grads, adam)
            losses.append(loss.item())
            tracker.end("step")
        epoch_losses.append(float(np.mean(losses)))
        if log_every and (epoch % log_every == 0 or epoch == epochs - 1):
            logger.info("epoch %d  mean loss %.6g", epoch + 1, epoch_losses[-1])

    logger.debug(tracker.get_summary())
    return PretrainResult(trained, epoch_losses)
