"""Shared fixtures: a tiny model configuration that keeps graphs small."""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from mixsynth.core.config import ModelConfig  # noqa: E402
from mixsynth.dsp.spectral import StftConfig  # noqa: E402
from mixsynth.nets.model import SynthModel, SynthParams, init_model  # noqa: E402

# 4 ms hop = 64 samples, 8 ms frames = 128 samples
TINY_HOP = 64


def tiny_config(**overrides: object) -> ModelConfig:
    values: dict[str, object] = {
        "hop_ms": 4.0,
        "frame_ms": 8.0,
        "n_harmonics": 8,
        "n_noise_bands": 9,
        "latent_dim": 4,
        "decoder_hidden": [8],
        "encoder_hidden": 8,
        "encoder_mels": 16,
        "encoder_mfcc": 8,
        "reverb_length": 32,
    }
    values.update(overrides)
    return ModelConfig(**values)  # type: ignore[arg-type]


def audible_model(config: ModelConfig, seed: int = 0) -> SynthModel:
    """Random model whose noise head starts well above silence."""
    model = init_model(config, seed=seed)
    model.weights["decoder.noise.bias"] = np.zeros(config.n_noise_bands)
    return model


def random_params(
    rng: np.random.Generator, n_frames: int, latent_dim: int, pitch_hz: float = 220.0
) -> SynthParams:
    return SynthParams(
        f0=pitch_hz * (1.0 + 0.05 * rng.standard_normal(n_frames)),
        z=rng.standard_normal((n_frames, latent_dim)),
        loudness=-6.0 + rng.standard_normal(n_frames),
    )


@pytest.fixture
def config() -> ModelConfig:
    return tiny_config()


@pytest.fixture
def model(config: ModelConfig) -> SynthModel:
    return audible_model(config)


@pytest.fixture
def small_stft() -> StftConfig:
    return StftConfig((8.0, 16.0))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
