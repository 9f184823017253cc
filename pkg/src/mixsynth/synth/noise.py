"""Filtered-noise synthesis with per-frame FIR filters."""

import numpy as np

from ..dsp.framing import hann
from ..grad import ops
from ..grad.graph import DiffValue
from .controls import ControlSignals, FrameGrid


def white_noise_frames(n_frames: int, frame_length: int, seed: int) -> np.ndarray:
    """Hann-windowed unit-variance Gaussian noise, one row per control frame."""
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n_frames, frame_length)) * hann(frame_length)


def fir_from_magnitudes(magnitudes: DiffValue) -> DiffValue:
    """Linear-phase FIR taps (T, L) from zero-phase magnitude responses (T, L/2+1).

    The inverse DFT gives a symmetric zero-phase response; it is rotated by
    L/2 to make it causal and then Hann-windowed.
    """
    n_bands = magnitudes.shape[-1]
    taps = 2 * (n_bands - 1)
    impulse = ops.irfft(magnitudes)
    rotation = (np.arange(taps) - taps // 2) % taps
    causal = ops.getitem(impulse, (slice(None), rotation))
    return causal * hann(taps)


def noise_synth(
    controls: ControlSignals, n_samples: int, seed: int, grid: FrameGrid
) -> DiffValue:
    """Overlap-add of white-noise frames filtered by each frame's FIR.

    Noise frames span two hops with a Hann window, so consecutive frames
    overlap by half and their windows sum to one. The filter's L/2 delay is
    compensated when the frames are placed back on the sample axis.
    """
    frame_length = 2 * grid.hop
    taps = 2 * (controls.n_noise_bands - 1)
    noise = controls.lift(white_noise_frames(controls.n_frames, frame_length, seed))
    filtered = ops.convolve(noise, fir_from_magnitudes(controls.noise))
    offset = grid.center - grid.hop - taps // 2
    return ops.overlap_add(filtered, grid.hop, n_samples, offset)
