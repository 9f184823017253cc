"""Score ingestion and score-informed initialization."""

from .init import (
    flat_params,
    init_f0,
    init_loudness,
    random_latents,
    random_pitch_params,
    score_informed_params,
    segmented_score_params,
    silence_pitch,
)
from .track import (
    SCORE_FORMAT,
    SILENCE,
    NoteEvent,
    ScoreTrack,
    load_score,
    rasterize,
    save_score,
    tracks_for_sources,
    tracks_from_document,
    tracks_to_document,
)

__all__ = [
    "SCORE_FORMAT",
    "SILENCE",
    "NoteEvent",
    "ScoreTrack",
    "flat_params",
    "init_f0",
    "init_loudness",
    "load_score",
    "random_latents",
    "random_pitch_params",
    "rasterize",
    "save_score",
    "score_informed_params",
    "segmented_score_params",
    "silence_pitch",
    "tracks_for_sources",
    "tracks_from_document",
    "tracks_to_document",
]
