"""Differentiable harmonic-plus-noise source synthesizer."""

from typing import Optional

from ..grad.graph import DiffValue, Operand
from .controls import ControlSignals, FrameGrid
from .harmonic import harmonic_synth
from .noise import fir_from_magnitudes, noise_synth, white_noise_frames
from .reverb import ReverbIR, apply_reverb


def synthesize(
    f0: Operand,
    controls: ControlSignals,
    reverb: Optional[ReverbIR],
    n_samples: int,
    seed: int,
    grid: FrameGrid,
) -> DiffValue:
    """apply_reverb(harmonic_synth + noise_synth); None or a disabled reverb adds nothing."""
    harmonic = harmonic_synth(f0, controls, n_samples, grid)
    noise = noise_synth(controls, n_samples, seed, grid)
    return apply_reverb(harmonic + noise, reverb)


__all__ = [
    "ControlSignals",
    "FrameGrid",
    "ReverbIR",
    "apply_reverb",
    "fir_from_magnitudes",
    "harmonic_synth",
    "noise_synth",
    "synthesize",
    "white_noise_frames",
]
