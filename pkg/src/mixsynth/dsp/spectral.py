"""STFT magnitudes, mel filterbanks and MFCCs."""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.fft import dct

from ..core.errors import ValidationError
from ..core.utils import SAMPLE_RATE, ms_to_samples, n_frames
from ..grad import ops
from ..grad.graph import DiffValue
from ..grad.ops import frame_signal
from .framing import AudioLike, as_samples, hann


@dataclass(frozen=True)
class StftConfig:
    """Family of STFT resolutions used by the multiscale spectral loss."""

    frame_lengths_ms: tuple[float, ...] = (8.0, 16.0, 32.0, 64.0, 128.0, 256.0)
    hop_fraction: float = 0.5
    sample_rate: int = SAMPLE_RATE
    resolutions: tuple[tuple[int, int], ...] = field(init=False)

    def __post_init__(self) -> None:
        if not self.frame_lengths_ms:
            raise ValidationError("loss needs at least one STFT frame length")
        if not 0.0 < self.hop_fraction <= 1.0:
            raise ValidationError(f"hop fraction must be in (0, 1], got {self.hop_fraction}")
        resolutions = []
        for frame_ms in self.frame_lengths_ms:
            frame_length = ms_to_samples(frame_ms, self.sample_rate)
            hop = max(1, int(round(frame_length * self.hop_fraction)))
            resolutions.append((frame_length, hop))
        object.__setattr__(self, "resolutions", tuple(resolutions))


def frame_sizes(frame_ms: float, hop_ms: float) -> tuple[int, int]:
    if frame_ms <= 0 or hop_ms <= 0:
        raise ValidationError(
            f"frame length and hop must be positive, got {frame_ms} ms / {hop_ms} ms"
        )
    return ms_to_samples(frame_ms), ms_to_samples(hop_ms)


def stft_frames(samples: np.ndarray, frame_length: int, hop: int) -> np.ndarray:
    """Hann-windowed frames, one per started hop, tail zero-padded."""
    frames = frame_signal(samples, frame_length, hop, n_frames(samples.shape[0], hop))
    return frames * hann(frame_length)


def stft_magnitude(x: AudioLike, frame_ms: float, hop_ms: float) -> np.ndarray:
    """Magnitude spectrogram, shape (frames, frame_length // 2 + 1)."""
    frame_length, hop = frame_sizes(frame_ms, hop_ms)
    return np.abs(np.fft.rfft(stft_frames(as_samples(x), frame_length, hop), axis=1))


def stft_magnitude_op(x: DiffValue, frame_length: int, hop: int) -> DiffValue:
    """Differentiable magnitude spectrogram of a 1-D signal (lengths in samples)."""
    frames = ops.frame(x, frame_length, hop, n_frames(x.shape[0], hop))
    return ops.dft_magnitude(frames, hann(frame_length))


def hz_to_mel(hz: np.ndarray) -> np.ndarray:
    return 2595.0 * np.log10(1.0 + np.asarray(hz) / 700.0)


def mel_to_hz(mel: np.ndarray) -> np.ndarray:
    return 700.0 * (10.0 ** (np.asarray(mel) / 2595.0) - 1.0)


@lru_cache(maxsize=16)
def mel_filterbank(
    n_mels: int, frame_length: int, fmin: float, fmax: float, sample_rate: int = SAMPLE_RATE
) -> np.ndarray:
    """Triangular mel filters sampled at the rfft bin frequencies, (n_mels, bins)."""
    if not 0 <= fmin < fmax <= sample_rate / 2:
        raise ValidationError(
            f"mel range must satisfy 0 <= fmin < fmax <= {sample_rate / 2}, "
            f"got {fmin}..{fmax}"
        )
    bin_hz = np.fft.rfftfreq(frame_length, 1.0 / sample_rate)
    edges = mel_to_hz(np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_mels + 2))
    lower, center, upper = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (bin_hz[None, :] - lower) / (center - lower)
    falling = (upper - bin_hz[None, :]) / (upper - center)
    bank = np.maximum(0.0, np.minimum(rising, falling))
    bank.setflags(write=False)
    return bank


def log_mel_spectrogram(
    x: AudioLike,
    frame_ms: float,
    hop_ms: float,
    n_mels: int,
    fmin: float,
    fmax: float,
) -> np.ndarray:
    """Natural-log mel magnitude spectrogram, floored at 1e-6."""
    frame_length, _ = frame_sizes(frame_ms, hop_ms)
    bank = mel_filterbank(n_mels, frame_length, float(fmin), float(fmax))
    magnitude = stft_magnitude(x, frame_ms, hop_ms)
    return np.log(np.maximum(magnitude @ bank.T, ops.LOG_FLOOR))


def cepstrum(log_mel: np.ndarray, n_coeffs: int) -> np.ndarray:
    """Orthonormal DCT-II along the mel axis, truncated to n_coeffs."""
    if n_coeffs > log_mel.shape[-1]:
        raise ValidationError(
            f"n_coeffs ({n_coeffs}) cannot exceed n_mels ({log_mel.shape[-1]})"
        )
    return dct(log_mel, type=2, axis=-1, norm="ortho")[..., :n_coeffs]


def mfcc(
    x: AudioLike,
    frame_ms: float = 128.0,
    hop_ms: float = 32.0,
    n_mels: int = 128,
    fmin: float = 20.0,
    fmax: float = 8000.0,
    n_coeffs: int = 30,
) -> np.ndarray:
    """MFCC matrix (frames x n_coeffs). Defaults are the evaluation configuration."""
    if n_coeffs > n_mels:
        raise ValidationError(f"n_coeffs ({n_coeffs}) cannot exceed n_mels ({n_mels})")
    return cepstrum(log_mel_spectrogram(x, frame_ms, hop_ms, n_mels, fmin, fmax), n_coeffs)
