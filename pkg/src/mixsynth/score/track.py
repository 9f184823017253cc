"""Score tracks, the score file format and piano-roll rasterization."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Union

import numpy as np

from ..core.errors import SchemaError, ScoreError
from ..core.utils import dump_json, read_json, write_text_atomic

logger = logging.getLogger(__name__)

SCORE_FORMAT = "mixsynth-score/1"
SILENCE = -1
_KIND = "score"


@dataclass(frozen=True)
class NoteEvent:
    onset: float
    offset: float
    note: int

    def __post_init__(self) -> None:
        if not self.onset < self.offset:
            raise ScoreError(
                f"note {self.note}: onset {self.onset} s is not before offset {self.offset} s"
            )
        if not 0 <= self.note <= 127:
            raise ScoreError(f"note number {self.note} is outside 0..127")

    def shifted(self, seconds: float) -> "NoteEvent":
        return NoteEvent(self.onset + seconds, self.offset + seconds, self.note)


@dataclass
class ScoreTrack:
    """Monophonic note events of one source, sorted by onset."""

    source: int
    events: list[NoteEvent] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.events = sorted(self.events, key=lambda e: (e.onset, e.offset))
        for previous, current in zip(self.events, self.events[1:]):
            if current.onset < previous.offset:
                raise ScoreError(
                    f"source {self.source}: notes at {previous.onset}-{previous.offset} s "
                    f"and {current.onset}-{current.offset} s overlap",
                    "each source must be monophonic",
                )

    def shifted(self, seconds: float) -> "ScoreTrack":
        """Move every event by `seconds` (negative moves earlier)."""
        return ScoreTrack(self.source, [e.shifted(seconds) for e in self.events])


PianoRoll = np.ndarray


def rasterize(
    track: ScoreTrack, n_frames: int, hop_ms: float = 32.0, frame_ms: float = 64.0
) -> PianoRoll:
    """Framewise note numbers; -1 where no note is active at a frame center.

    Frame t is centered at t * hop_ms + frame_ms / 2. An event covers
    [onset, offset] inclusive; where two events touch, the later one wins.
    """
    centers = (hop_ms * np.arange(n_frames) + frame_ms / 2.0) / 1000.0
    roll = np.full(n_frames, SILENCE, dtype=np.int64)
    for event in track.events:
        active = (centers >= event.onset) & (centers <= event.offset)
        roll[active] = event.note
    return roll


def tracks_from_document(document: Any) -> list[ScoreTrack]:
    """Parse a score document: {"format", "events": [...]} or a bare event list."""
    if isinstance(document, dict):
        if document.get("format") != SCORE_FORMAT:
            raise SchemaError(
                _KIND, "format", f"is {document.get('format')!r}, expected {SCORE_FORMAT!r}"
            )
        raw_events = document.get("events")
    else:
        raw_events = document
    if not isinstance(raw_events, list):
        raise SchemaError(_KIND, "events", "is not a list")

    by_source: dict[int, list[NoteEvent]] = {}
    for i, raw in enumerate(raw_events):
        if not isinstance(raw, dict):
            raise SchemaError(_KIND, f"events[{i}]", "is not an object")
        for key in ("source", "onset_s", "offset_s", "midi_note"):
            if key not in raw:
                raise SchemaError(_KIND, f"events[{i}].{key}", "is missing")
        source, note = raw["source"], raw["midi_note"]
        if not isinstance(source, int) or isinstance(source, bool) or source < 0:
            raise SchemaError(_KIND, f"events[{i}].source", "must be a non-negative integer")
        if not isinstance(note, int) or isinstance(note, bool):
            raise SchemaError(_KIND, f"events[{i}].midi_note", "must be an integer")
        onset, offset = raw["onset_s"], raw["offset_s"]
        if not all(_is_number(v) for v in (onset, offset)):
            raise SchemaError(_KIND, f"events[{i}]", "onset_s/offset_s must be numbers")
        by_source.setdefault(source, []).append(NoteEvent(float(onset), float(offset), note))

    return [ScoreTrack(source, events) for source, events in sorted(by_source.items())]


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def tracks_to_document(tracks: list[ScoreTrack]) -> dict[str, Any]:
    events = [
        {
            "source": track.source,
            "onset_s": event.onset,
            "offset_s": event.offset,
            "midi_note": event.note,
        }
        for track in sorted(tracks, key=lambda t: t.source)
        for event in track.events
    ]
    return {"format": SCORE_FORMAT, "events": events}


def load_score(path: Union[str, Path]) -> list[ScoreTrack]:
    tracks = tracks_from_document(read_json(Path(path), _KIND))
    logger.debug("Loaded score %s with %d tracks", path, len(tracks))
    return tracks


def save_score(tracks: list[ScoreTrack], path: Union[str, Path]) -> None:
    write_text_atomic(Path(path), dump_json(tracks_to_document(tracks)))


def tracks_for_sources(tracks: list[ScoreTrack], n_sources: int) -> list[ScoreTrack]:
    """One track per source index 0..R-1; missing sources get an empty track."""
    by_source = {t.source: t for t in tracks}
    extra = sorted(s for s in by_source if s >= n_sources)
    if extra:
        raise ScoreError(
            f"score names sources {extra} but only {n_sources} sources are fitted",
            "pass --sources to match the score",
        )
    return [by_source.get(r, ScoreTrack(r)) for r in range(n_sources)]
