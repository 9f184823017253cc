"""Autocorrelation F0 estimation for monophonic training clips."""

import logging
from dataclasses import dataclass

import numpy as np

from ..core.errors import ValidationError
from ..core.utils import SAMPLE_RATE
from .framing import AudioLike, as_samples, hann
from .spectral import frame_sizes, stft_frames

logger = logging.getLogger(__name__)

PEAK_RATIO = 0.9


@dataclass(frozen=True)
class PitchTrack:
    """Per-frame F0 estimate with the normalized autocorrelation peak height."""

    f0: np.ndarray
    confidence: np.ndarray
    voiced: np.ndarray


def estimate_f0(
    x: AudioLike,
    hop_ms: float = 32.0,
    frame_ms: float = 64.0,
    fmin: float = 50.0,
    fmax: float = 2000.0,
    threshold: float = 0.5,
) -> PitchTrack:
    """Estimate F0 per frame from the normalized autocorrelation peak.

    Frames whose peak falls below threshold are unvoiced; their F0 is
    interpolated from the neighbouring voiced frames (or held at the nearest
    one) so the track is usable as a synthesis input everywhere.
    """
    if not 0.0 < fmin < fmax < SAMPLE_RATE / 2:
        raise ValidationError(f"pitch range {fmin}..{fmax} Hz is not valid")
    frame_length, hop = frame_sizes(frame_ms, hop_ms)
    min_lag = int(np.floor(SAMPLE_RATE / fmax))
    max_lag = int(np.ceil(SAMPLE_RATE / fmin))
    if max_lag >= frame_length - 1:
        raise ValidationError(
            f"fmin {fmin} Hz needs frames longer than {frame_ms} ms",
            "raise fmin or the frame length",
        )

    frames = stft_frames(as_samples(x), frame_length, hop)
    spectrum = np.fft.rfft(frames, n=2 * frame_length, axis=1)
    autocorr = np.fft.irfft(np.abs(spectrum) ** 2, axis=1)[:, :frame_length]
    # Divide out the window's own autocorrelation so long lags are not penalized.
    window = hann(frame_length)
    window_corr = np.correlate(window, window, mode="full")[frame_length - 1 :]
    energy = autocorr[:, :1]
    with np.errstate(divide="ignore", invalid="ignore"):
        normalized = np.where(
            energy > 1e-10, autocorr / (energy * window_corr / window_corr[0]), 0.0
        )

    search = normalized[:, min_lag : max_lag + 1]
    # First local peak within 10% of the best one; later peaks are period multiples.
    is_peak = np.zeros(search.shape, dtype=bool)
    is_peak[:, 1:-1] = (search[:, 1:-1] >= search[:, :-2]) & (search[:, 1:-1] > search[:, 2:])
    candidates = is_peak & (search >= PEAK_RATIO * search.max(axis=1, keepdims=True))
    best = np.where(
        candidates.any(axis=1), np.argmax(candidates, axis=1), np.argmax(search, axis=1)
    )
    confidence = search[np.arange(search.shape[0]), best]
    lag = (best + min_lag).astype(np.float64)

    # Parabolic refinement around the peak.
    inner = (best > 0) & (best < search.shape[1] - 1)
    rows = np.nonzero(inner)[0]
    left = search[rows, best[rows] - 1]
    center = search[rows, best[rows]]
    right = search[rows, best[rows] + 1]
    curvature = left - 2.0 * center + right
    shift = np.where(np.abs(curvature) > 1e-12, 0.5 * (left - right) / curvature, 0.0)
    lag[rows] += np.clip(shift, -0.5, 0.5)

    f0 = SAMPLE_RATE / lag
    voiced = confidence >= threshold
    if voiced.any():
        indices = np.arange(f0.shape[0])
        f0 = np.interp(indices, indices[voiced], f0[voiced])
    else:
        logger.warning("No voiced frames found; F0 track falls back to %.1f Hz", fmin)
        f0 = np.full_like(f0, fmin)
    return PitchTrack(f0=f0, confidence=np.clip(confidence, 0.0, 1.0), voiced=voiced)
