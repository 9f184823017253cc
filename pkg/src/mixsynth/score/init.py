"""Initial synthesis parameters: score-informed, flat and random-pitch."""

from typing import Optional, Sequence

import numpy as np

from ..core.errors import ScoreError, ValidationError
from ..core.utils import midi_to_hz
from ..nets.model import SynthParams
from .track import SILENCE, PianoRoll, ScoreTrack, rasterize


def silence_pitch(roll: PianoRoll) -> float:
    """Mean of the roll's note numbers over its active frames (may be fractional)."""
    active = roll[roll != SILENCE]
    if active.size == 0:
        raise ScoreError(
            "the piano roll has no active frames, so no pitch can be derived for silence",
            "use --fallback-pitch for sources without notes",
        )
    return float(np.mean(active))


def init_f0(roll: PianoRoll) -> np.ndarray:
    """Per-frame Hz from note numbers; silent frames use the mean active pitch."""
    roll = np.asarray(roll)
    if np.any((roll < SILENCE) | (roll > 127)):
        raise ValidationError("piano roll values must lie in -1..127")
    pitches = np.where(roll == SILENCE, silence_pitch(roll), roll.astype(np.float64))
    return midi_to_hz(pitches)


def init_loudness(roll: PianoRoll, l_high: float = -6.0, l_low: float = -10.0) -> np.ndarray:
    """l_high on active frames, l_low on silent ones (model loudness units, dB)."""
    if not l_high > l_low:
        raise ValidationError(f"l_high ({l_high}) must exceed l_low ({l_low})")
    return np.where(np.asarray(roll) == SILENCE, l_low, l_high).astype(np.float64)


def random_latents(n_frames: int, latent_dim: int, rng: np.random.Generator) -> np.ndarray:
    """Timbre latents drawn from a standard normal distribution."""
    return rng.standard_normal((n_frames, latent_dim))


def score_informed_params(
    roll: PianoRoll,
    latent_dim: int,
    rng: np.random.Generator,
    l_high: float = -6.0,
    l_low: float = -10.0,
    fallback_pitch: Optional[float] = None,
) -> SynthParams:
    """f0 and loudness from the roll, z from N(0, 1).

    A roll without any note uses fallback_pitch (MIDI) for every frame and
    l_low loudness; without a fallback it is an error.
    """
    roll = np.asarray(roll)
    if np.all(roll == SILENCE) and fallback_pitch is not None:
        f0 = np.full(roll.shape[0], float(midi_to_hz(fallback_pitch)))
    else:
        f0 = init_f0(roll)
    return SynthParams(
        f0=f0,
        z=random_latents(roll.shape[0], latent_dim, rng),
        loudness=init_loudness(roll, l_high, l_low),
    )


def segmented_score_params(
    track: ScoreTrack,
    segment_starts: Sequence[float],
    segment_frames: int,
    latent_dim: int,
    rng: np.random.Generator,
    hop_ms: float = 32.0,
    frame_ms: float = 64.0,
    l_high: float = -6.0,
    l_low: float = -10.0,
    fallback_pitch: Optional[float] = None,
) -> SynthParams:
    """Score-informed parameters built one segment at a time and joined in time.

    Each segment rasterizes the track shifted into its own time base
    (segment_starts in seconds), so its silent frames take the mean pitch of
    its own notes.
    """
    parts = [
        score_informed_params(
            rasterize(track.shifted(-start), segment_frames, hop_ms, frame_ms),
            latent_dim,
            rng,
            l_high,
            l_low,
            fallback_pitch=fallback_pitch,
        )
        for start in segment_starts
    ]
    return SynthParams(
        f0=np.concatenate([p.f0 for p in parts]),
        z=np.concatenate([p.z for p in parts]),
        loudness=np.concatenate([p.loudness for p in parts]),
    )


def flat_params(
    n_frames: int,
    latent_dim: int,
    pitch: float,
    rng: np.random.Generator,
    loudness: float = -6.0,
) -> SynthParams:
    """Constant MIDI pitch and loudness everywhere; z from N(0, 1)."""
    return SynthParams(
        f0=np.full(n_frames, float(midi_to_hz(pitch))),
        z=random_latents(n_frames, latent_dim, rng),
        loudness=np.full(n_frames, float(loudness)),
    )


def random_pitch_params(
    n_frames: int,
    latent_dim: int,
    rng: np.random.Generator,
    pitch_range: tuple[float, float] = (48.0, 84.0),
    loudness: float = -6.0,
) -> SynthParams:
    """Flat parameters at a pitch drawn uniformly from pitch_range (MIDI)."""
    low, high = pitch_range
    if not low < high:
        raise ValidationError(f"pitch range {pitch_range} is empty")
    return flat_params(n_frames, latent_dim, float(rng.uniform(low, high)), rng, loudness)
