"""Audio buffers, windows and frame-to-sample interpolation."""

from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np
from scipy.signal import get_window

from ..core.errors import ValidationError
from ..core.utils import SAMPLE_RATE
from ..grad.ops import interpolation_matrix


@dataclass(frozen=True)
class AudioBuffer:
    """Mono signal at the fixed 16 kHz sample rate."""

    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValidationError(
                f"audio must be mono (1-D), got shape {samples.shape}"
            )
        if not np.all(np.isfinite(samples)):
            raise ValidationError("audio contains non-finite samples")
        if self.sample_rate != SAMPLE_RATE:
            raise ValidationError(
                f"expected {SAMPLE_RATE} Hz audio, got {self.sample_rate} Hz"
            )
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return int(self.samples.shape[0])

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate


AudioLike = Union[AudioBuffer, np.ndarray]


def as_samples(x: AudioLike) -> np.ndarray:
    """Return the float64 sample array of an AudioBuffer or raw array."""
    if isinstance(x, AudioBuffer):
        return x.samples
    return AudioBuffer(np.asarray(x, dtype=np.float64)).samples


@lru_cache(maxsize=32)
def hann(length: int) -> np.ndarray:
    """Periodic Hann window (sums to a constant under 50% overlap-add)."""
    window = get_window("hann", length)
    window.setflags(write=False)
    return window


def upsample_framewise(
    values: np.ndarray, hop: int, total: int, offset: int = 0
) -> np.ndarray:
    """Linearly interpolate per-frame values (axis 0) to per-sample values.

    Frame t is anchored at sample offset + hop * t; samples before the first
    or after the last anchor hold the end value.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim not in (1, 2) or values.shape[0] < 1:
        raise ValidationError(f"upsample: expected (T,) or (T, K) values, got {values.shape}")
    if hop <= 0:
        raise ValidationError(f"upsample: hop must be positive, got {hop}")
    matrix = interpolation_matrix(values.shape[0], hop, total, offset)
    return np.asarray(matrix @ values)
