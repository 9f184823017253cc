"""Synthetic mixtures rendered by the model itself from known parameters."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from ..core.errors import ValidationError
from ..core.utils import SAMPLE_RATE, midi_to_hz, n_frames
from ..mixture.model import MixtureState, synthesize_mixture
from ..nets.model import SynthModel, SynthParams
from ..score.init import init_f0
from ..score.track import SILENCE, NoteEvent, ScoreTrack, rasterize, save_score
from .paramfile import ParamFile, save_params
from .wavio import write_wav

logger = logging.getLogger(__name__)


@dataclass
class SourceScenario:
    """Random-walk melody settings of one source (pitches in MIDI)."""

    pitch_range: tuple[float, float] = (55.0, 72.0)
    note_seconds: tuple[float, float] = (0.4, 1.2)
    rest_probability: float = 0.15
    loudness_range: tuple[float, float] = (-8.0, -4.0)
    max_step: int = 4
    detune_cents: float = 10.0

    def validate(self, index: int, n_harmonics: int) -> None:
        low, high = self.pitch_range
        if not 0 <= low < high <= 127:
            raise ValidationError(
                f"source {index}: pitch range {self.pitch_range} is not within 0..127"
            )
        if midi_to_hz(high) >= SAMPLE_RATE / 2:
            raise ValidationError(
                f"source {index}: MIDI {high} is above Nyquist",
                f"keep notes below {SAMPLE_RATE // 2} Hz",
            )
        if midi_to_hz(low) * n_harmonics < 20.0:
            logger.warning(
                "source %d: lowest note has all %d harmonics below 20 Hz", index, n_harmonics
            )
        short, long = self.note_seconds
        if not 0 < short <= long:
            raise ValidationError(f"source {index}: note lengths {self.note_seconds} are invalid")
        if not 0 <= self.rest_probability < 1:
            raise ValidationError(f"source {index}: rest probability must be in [0, 1)")
        if not self.loudness_range[0] <= self.loudness_range[1]:
            raise ValidationError(f"source {index}: loudness range {self.loudness_range} is empty")


@dataclass
class Scenario:
    sources: list[SourceScenario]
    duration: float = 12.0
    silence_loudness: float = -40.0

    @classmethod
    def default(cls, n_sources: int, duration: float = 12.0) -> "Scenario":
        """Sources a fifth-plus-octave apart so their harmonics interleave."""
        return cls(
            [
                SourceScenario(pitch_range=(48.0 + 10.0 * r, 64.0 + 10.0 * r))
                for r in range(n_sources)
            ],
            duration=duration,
        )

    @classmethod
    def from_document(cls, document: Any, n_sources: int, duration: float) -> "Scenario":
        """Build from {duration?, silence_loudness?, sources: [{pitch_range, ...}]}."""
        if not isinstance(document, dict):
            raise ValidationError("scenario must be a mapping")
        raw_sources = document.get("sources", [])
        if not isinstance(raw_sources, list):
            raise ValidationError("scenario 'sources' must be a list")
        if len(raw_sources) > n_sources:
            raise ValidationError(
                f"scenario describes {len(raw_sources)} sources, --sources is {n_sources}"
            )
        base = cls.default(n_sources, float(document.get("duration", duration)))
        known = set(SourceScenario.__dataclass_fields__)
        for r, raw in enumerate(raw_sources):
            if not isinstance(raw, dict) or set(raw) - known:
                raise ValidationError(
                    f"scenario source {r} has unknown keys", f"known: {sorted(known)}"
                )
            values = {k: tuple(v) if isinstance(v, list) else v for k, v in raw.items()}
            base.sources[r] = SourceScenario(**{**base.sources[r].__dict__, **values})
        if "silence_loudness" in document:
            base.silence_loudness = float(document["silence_loudness"])
        return base

    def validate(self, n_harmonics: int) -> None:
        if not self.sources:
            raise ValidationError("scenario has no sources")
        if self.duration <= 0:
            raise ValidationError(f"duration must be positive, got {self.duration}")
        for r, source in enumerate(self.sources):
            source.validate(r, n_harmonics)


@dataclass
class SyntheticScene:
    mixture: np.ndarray
    stems: list[np.ndarray]
    params: ParamFile
    tracks: list[ScoreTrack] = field(default_factory=list)


def _melody(
    rng: np.random.Generator, source: SourceScenario, index: int, duration: float
) -> ScoreTrack:
    low, high = source.pitch_range
    pitch = int(rng.integers(int(np.ceil(low)), int(np.floor(high)) + 1))
    events = []
    t = 0.0
    while t < duration:
        length = float(rng.uniform(*source.note_seconds))
        if events and rng.random() < source.rest_probability:
            t += length
            continue
        events.append(NoteEvent(t, min(t + length, duration), pitch))
        step = int(rng.integers(-source.max_step, source.max_step + 1))
        pitch = int(np.clip(pitch + step, np.ceil(low), np.floor(high)))
        t += length
    return ScoreTrack(index, events)


def generate_scene(
    model: SynthModel, scenario: Scenario, seed: int = 0
) -> SyntheticScene:
    """Draw melodies and parameters, then render them with the model.

    f0 follows the notes with a per-note detune, silent frames keep the
    mean active pitch; loudness is constant per note and `silence_loudness`
    between notes; z is one standard-normal vector per source.
    """
    scenario.validate(model.config.n_harmonics)
    rng = np.random.default_rng(seed)
    config = model.config
    n_samples = int(round(scenario.duration * config.sample_rate))
    frames = n_frames(n_samples, model.hop)

    tracks, sources = [], []
    for r, source in enumerate(scenario.sources):
        track = _melody(rng, source, r, scenario.duration)
        roll = rasterize(track, frames, config.hop_ms, config.frame_ms)
        f0 = init_f0(roll)
        loudness = np.full(frames, scenario.silence_loudness)
        for event in track.events:
            active = (roll == event.note) & _covered(frames, config.hop_ms, config.frame_ms, event)
            f0[active] *= 2.0 ** (rng.uniform(-source.detune_cents, source.detune_cents) / 1200.0)
            loudness[active] = rng.uniform(*source.loudness_range)
        z = np.tile(rng.standard_normal(config.latent_dim), (frames, 1))
        tracks.append(track)
        sources.append(SynthParams(f0, z, loudness))
        n_active = int(np.sum(roll != SILENCE))
        logger.debug("source %d: %d notes, %d active frames", r, len(track.events), n_active)

    state = MixtureState(sources, [model], n_samples, seed)
    mixture, stems = synthesize_mixture(state)
    params = ParamFile(sources, hop_ms=config.hop_ms, metadata={"seed": seed, "generator": "gen"})
    return SyntheticScene(mixture, stems, params, tracks)


def _covered(frames: int, hop_ms: float, frame_ms: float, event: NoteEvent) -> np.ndarray:
    centers = (hop_ms * np.arange(frames) + frame_ms / 2.0) / 1000.0
    return (centers >= event.onset) & (centers <= event.offset)


def write_scene(scene: SyntheticScene, out_dir: Path) -> dict[str, Path]:
    """mixture.wav, stems/source_<r>.wav with .params.json sidecars, params.json, score.json."""
    out_dir = Path(out_dir)
    written = {
        "mixture": out_dir / "mixture.wav",
        "params": out_dir / "params.json",
        "score": out_dir / "score.json",
    }
    write_wav(written["mixture"], scene.mixture)
    for r, stem in enumerate(scene.stems):
        stem_path = out_dir / "stems" / f"source_{r}.wav"
        write_wav(stem_path, stem)
        sidecar = ParamFile(
            [scene.params.sources[r]],
            hop_ms=scene.params.hop_ms,
            metadata={**scene.params.metadata, "source": r},
        )
        save_params(sidecar, stem_path.with_suffix(".params.json"))
    save_params(scene.params, written["params"])
    save_score(scene.tracks, written["score"])
    return written
