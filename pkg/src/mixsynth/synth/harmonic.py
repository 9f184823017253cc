"""Additive synthesis of integer-multiple harmonics."""

import numpy as np

from ..core.errors import ShapeError
from ..grad import ops
from ..grad.graph import DiffValue, Operand
from .controls import ControlSignals, FrameGrid


def harmonic_synth(
    f0: Operand, controls: ControlSignals, n_samples: int, grid: FrameGrid
) -> DiffValue:
    """Sum of K sinusoids at k * f0 with piecewise-linear frequency and amplitude.

    The phase of every harmonic starts at zero and integrates the upsampled
    instantaneous frequency. Harmonics at or above Nyquist are silenced
    sample by sample; the mask is a constant of the forward pass.
    """
    f0 = controls.lift(f0)
    n_frames = controls.n_frames
    if f0.shape != (n_frames,):
        raise ShapeError("harmonic_synth", f0.shape, controls.amplitude.shape)
    sr = grid.sample_rate
    harmonics = np.arange(1, controls.n_harmonics + 1, dtype=np.float64)

    f0_samples = ops.upsample(f0, grid.hop, n_samples, grid.center)
    phase = ops.cumsum(f0_samples * (2.0 * np.pi / sr), axis=0, exclusive=True)
    phases = ops.reshape(phase, (n_samples, 1)) * harmonics[None, :]

    per_frame = ops.reshape(controls.amplitude, (n_frames, 1)) * controls.distribution
    amplitudes = ops.upsample(per_frame, grid.hop, n_samples, grid.center)
    audible = (f0_samples.data[:, None] * harmonics[None, :] < sr / 2.0).astype(np.float64)

    return ops.sum(amplitudes * audible * ops.sin(phases), axis=1)
