"""Non-learned signal processing: spectra, MFCCs, loudness, interpolation."""

from .framing import AudioBuffer, as_samples, hann, upsample_framewise
from .loudness import a_weighted_loudness, a_weighting_db
from .pitch import PitchTrack, estimate_f0
from .spectral import (
    StftConfig,
    mel_filterbank,
    mfcc,
    stft_magnitude,
    stft_magnitude_op,
)

__all__ = [
    "AudioBuffer",
    "PitchTrack",
    "StftConfig",
    "a_weighted_loudness",
    "a_weighting_db",
    "as_samples",
    "estimate_f0",
    "hann",
    "mel_filterbank",
    "mfcc",
    "stft_magnitude",
    "stft_magnitude_op",
    "upsample_framewise",
]
