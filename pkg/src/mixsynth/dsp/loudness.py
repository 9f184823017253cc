"""A-weighted framewise loudness."""

from functools import lru_cache

import numpy as np

from ..core.utils import SAMPLE_RATE
from .framing import AudioLike, as_samples, hann
from .spectral import frame_sizes, stft_frames

LOUDNESS_FLOOR_DB = -120.0
DEFAULT_LOUDNESS_FRAME_MS = 64.0
DEFAULT_LOUDNESS_HOP_MS = 32.0


def a_weighting_db(frequencies: np.ndarray) -> np.ndarray:
    """IEC 61672 A-weighting gain in dB (0 dB at 1 kHz, -inf at DC)."""
    f2 = np.asarray(frequencies, dtype=np.float64) ** 2
    numerator = 12194.0**2 * f2**2
    denominator = (
        (f2 + 20.6**2)
        * np.sqrt((f2 + 107.7**2) * (f2 + 737.9**2))
        * (f2 + 12194.0**2)
    )
    with np.errstate(divide="ignore"):
        return 20.0 * np.log10(numerator / denominator) + 2.0


@lru_cache(maxsize=8)
def _power_weights(frame_length: int, sample_rate: int) -> np.ndarray:
    # Linear power gains, normalized so a full-scale sine reads 10*log10(1/2).
    window = hann(frame_length)
    gains = 10.0 ** (a_weighting_db(np.fft.rfftfreq(frame_length, 1.0 / sample_rate)) / 10.0)
    weights = gains / (frame_length * np.sum(window**2) / 2.0)
    weights.setflags(write=False)
    return weights


def a_weighted_loudness(
    x: AudioLike,
    hop_ms: float = DEFAULT_LOUDNESS_HOP_MS,
    frame_ms: float = DEFAULT_LOUDNESS_FRAME_MS,
) -> np.ndarray:
    """Framewise loudness in dB: 10*log10 of the A-weighted power spectrum sum.

    A full-scale 1 kHz sine reads about -3 dB. Values are floored at -120 dB,
    so scaling the input by g shifts every unfloored frame by 20*log10(g).
    """
    frame_length, hop = frame_sizes(frame_ms, hop_ms)
    spectrum = np.fft.rfft(stft_frames(as_samples(x), frame_length, hop), axis=1)
    power = (np.abs(spectrum) ** 2) @ _power_weights(frame_length, SAMPLE_RATE)
    floor = 10.0 ** (LOUDNESS_FLOOR_DB / 10.0)
    return 10.0 * np.log10(np.maximum(power, floor))
