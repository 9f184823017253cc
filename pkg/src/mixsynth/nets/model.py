"""Timbre encoder and control decoder of a source synthesizer."""

import copy
import hashlib
import logging
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from ..core.config import ModelConfig
from ..core.errors import ShapeError, ValidationError
from ..core.utils import ms_to_samples, n_frames
from ..dsp.framing import AudioLike, as_samples
from ..dsp.spectral import mfcc
from ..grad import ops
from ..grad.graph import DiffGraph, DiffValue
from ..synth import ControlSignals, ReverbIR
from .layers import dense, exp_sigmoid, glorot, hidden_stack

logger = logging.getLogger(__name__)

# Decoder-side F0 floor in Hz; keeps log-frequency finite for any optimizer state.
DECODER_F0_FLOOR = 10.0
ENCODER_FMIN = 20.0
ENCODER_FMAX = 8000.0
NOISE_BIAS_INIT = -5.0


@dataclass
class SynthParams:
    """Framewise synthesis parameters of one source: f0 (T,), z (T, D), loudness (T,)."""

    f0: np.ndarray
    z: np.ndarray
    loudness: np.ndarray

    def __post_init__(self) -> None:
        self.f0 = np.asarray(self.f0, dtype=np.float64)
        self.z = np.asarray(self.z, dtype=np.float64)
        self.loudness = np.asarray(self.loudness, dtype=np.float64)
        t = self.f0.shape[0] if self.f0.ndim == 1 else -1
        if t < 1 or self.z.ndim != 2 or self.z.shape[0] != t or self.loudness.shape != (t,):
            raise ShapeError("synth_params", self.f0.shape, self.z.shape, self.loudness.shape)

    @property
    def n_frames(self) -> int:
        return self.f0.shape[0]

    @property
    def latent_dim(self) -> int:
        return self.z.shape[1]

    def copy(self) -> "SynthParams":
        return SynthParams(self.f0.copy(), self.z.copy(), self.loudness.copy())

    def slice_frames(self, start: int, stop: int) -> "SynthParams":
        return SynthParams(
            self.f0[start:stop].copy(), self.z[start:stop].copy(), self.loudness[start:stop].copy()
        )

    def is_finite(self) -> bool:
        return bool(
            np.all(np.isfinite(self.f0))
            and np.all(np.isfinite(self.z))
            and np.all(np.isfinite(self.loudness))
        )


def expected_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Name -> shape of every weight tensor a model with this config holds."""
    shapes: dict[str, tuple[int, ...]] = {}
    h = config.encoder_hidden
    shapes["encoder.hidden0.weight"] = (config.encoder_mfcc, h)
    shapes["encoder.hidden0.bias"] = (h,)
    shapes["encoder.norm0.gain"] = (h,)
    shapes["encoder.norm0.bias"] = (h,)
    shapes["encoder.out.weight"] = (h, config.latent_dim)
    shapes["encoder.out.bias"] = (config.latent_dim,)

    width = 1 + config.latent_dim + 1
    for i, hidden in enumerate(config.decoder_hidden):
        shapes[f"decoder.hidden{i}.weight"] = (width, hidden)
        shapes[f"decoder.hidden{i}.bias"] = (hidden,)
        shapes[f"decoder.norm{i}.gain"] = (hidden,)
        shapes[f"decoder.norm{i}.bias"] = (hidden,)
        width = hidden
    for head, size in (
        ("amplitude", 1),
        ("harmonics", config.n_harmonics),
        ("noise", config.n_noise_bands),
    ):
        shapes[f"decoder.{head}.weight"] = (width, size)
        shapes[f"decoder.{head}.bias"] = (size,)
    if config.reverb:
        shapes["reverb.ir"] = (config.reverb_length,)
    return shapes


@dataclass
class SynthModel:
    """Weights of one source synthesizer plus the configuration they were built for."""

    config: ModelConfig
    weights: dict[str, np.ndarray]

    def __post_init__(self) -> None:
        expected = expected_shapes(self.config)
        if set(expected) != set(self.weights):
            missing = sorted(set(expected) - set(self.weights))
            extra = sorted(set(self.weights) - set(expected))
            raise ValidationError(f"model weights mismatch (missing {missing}, extra {extra})")
        for name, shape in expected.items():
            if self.weights[name].shape != shape:
                raise ShapeError(name, self.weights[name].shape, shape)

    def reverb(self, bound: Optional[Mapping[str, DiffValue]] = None) -> ReverbIR:
        """The model's reverb, reading the IR from bound graph weights when given."""
        if not self.config.reverb:
            return ReverbIR.disabled()
        if bound is not None:
            return ReverbIR(bound["reverb.ir"])
        return ReverbIR(self.weights["reverb.ir"])

    @property
    def hop(self) -> int:
        return ms_to_samples(self.config.hop_ms, self.config.sample_rate)

    def copy(self) -> "SynthModel":
        weights = {name: value.copy() for name, value in self.weights.items()}
        return SynthModel(copy.deepcopy(self.config), weights)

    def bind(self, graph: DiffGraph, trainable: bool = False) -> dict[str, DiffValue]:
        """Place every weight on a graph as a variable (training) or constant."""
        leaf = graph.variable if trainable else graph.constant
        return {name: leaf(value) for name, value in sorted(self.weights.items())}

    def fingerprint(self) -> str:
        """SHA-256 over weight names and their float64 bytes."""
        digest = hashlib.sha256()
        for name in sorted(self.weights):
            digest.update(name.encode())
            digest.update(np.ascontiguousarray(self.weights[name], dtype="<f8").tobytes())
        return digest.hexdigest()


def init_model(config: Optional[ModelConfig] = None, seed: int = 0) -> SynthModel:
    """Randomly initialized model (Glorot weights, unit norm gains)."""
    config = config if config is not None else ModelConfig()
    rng = np.random.default_rng(seed)
    weights: dict[str, np.ndarray] = {}
    for name, shape in expected_shapes(config).items():
        if name.endswith(".weight"):
            weights[name] = glorot(rng, shape[0], shape[1])
        elif name.endswith(".gain"):
            weights[name] = np.ones(shape)
        elif name == "reverb.ir":
            decay = np.exp(-np.arange(shape[0]) / (0.1 * config.sample_rate))
            weights[name] = 1e-3 * rng.standard_normal(shape) * decay
            weights[name][0] = 1.0
        else:
            weights[name] = np.zeros(shape)
    weights["decoder.noise.bias"] = np.full(config.n_noise_bands, NOISE_BIAS_INIT)
    logger.debug("Initialized model with %d tensors (seed %d)", len(weights), seed)
    return SynthModel(config, weights)


def encoder_features(x: AudioLike, config: ModelConfig) -> np.ndarray:
    """MFCCs feeding the timbre encoder, one row per control frame."""
    return mfcc(
        x,
        frame_ms=config.frame_ms,
        hop_ms=config.hop_ms,
        n_mels=config.encoder_mels,
        fmin=ENCODER_FMIN,
        fmax=ENCODER_FMAX,
        n_coeffs=config.encoder_mfcc,
    )


def encode_timbre_op(
    features: np.ndarray, params: Mapping[str, DiffValue], graph: DiffGraph
) -> DiffValue:
    hidden = hidden_stack(graph.constant(features), params, "encoder", depth=1)
    return dense(hidden, params, "encoder.out")


def encode_timbre(
    x: AudioLike, model: SynthModel, n_frames_expected: Optional[int] = None
) -> np.ndarray:
    """Per-frame timbre latents z, shape (T, D)."""
    samples = as_samples(x)
    frames = n_frames(samples.shape[0], model.hop)
    if n_frames_expected is not None and frames != n_frames_expected:
        raise ValidationError(
            f"audio of {samples.shape[0]} samples gives {frames} frames, "
            f"expected {n_frames_expected}"
        )
    graph = DiffGraph()
    z = encode_timbre_op(encoder_features(samples, model.config), model.bind(graph), graph)
    return z.data


def decode_op(
    f0: DiffValue,
    z: DiffValue,
    loudness: DiffValue,
    params: Mapping[str, DiffValue],
    config: ModelConfig,
) -> ControlSignals:
    """Map (f0, z, loudness) frames to synthesizer controls on the same graph."""
    t = f0.shape[0]
    if f0.shape != (t,) or z.shape != (t, config.latent_dim) or loudness.shape != (t,):
        raise ShapeError("decode", f0.shape, z.shape, loudness.shape)

    # midi(f0) / 127 and (loudness + 60) / 60
    log_f0 = ops.log(f0, floor=DECODER_F0_FLOOR)
    midi = log_f0 * (12.0 / np.log(2.0)) + (69.0 - 12.0 * np.log2(440.0))
    inputs = ops.concat(
        [
            ops.reshape(midi * (1.0 / 127.0), (t, 1)),
            z,
            ops.reshape((loudness + 60.0) * (1.0 / 60.0), (t, 1)),
        ],
        axis=1,
    )
    hidden = hidden_stack(inputs, params, "decoder", depth=len(config.decoder_hidden))

    amplitude = exp_sigmoid(ops.reshape(dense(hidden, params, "decoder.amplitude"), (t,)))
    distribution = ops.softmax(dense(hidden, params, "decoder.harmonics"), axis=1)
    noise = exp_sigmoid(dense(hidden, params, "decoder.noise"))
    return ControlSignals(amplitude, distribution, noise)


def decode(params: SynthParams, model: SynthModel) -> ControlSignals:
    """Controls for fixed parameters, computed on a fresh constant graph."""
    if not params.is_finite():
        raise ValidationError("synthesis parameters contain non-finite values")
    graph = DiffGraph()
    return decode_op(
        graph.constant(params.f0),
        graph.constant(params.z),
        graph.constant(params.loudness),
        model.bind(graph),
        model.config,
    )
