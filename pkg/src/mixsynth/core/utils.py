"""Common utilities shared across mixsynth modules."""

import base64
import json
import time
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .errors import SchemaError, ValidationError

SAMPLE_RATE = 16000


def ms_to_samples(ms: float, sample_rate: int = SAMPLE_RATE) -> int:
    """Convert a duration in milliseconds to a whole number of samples."""
    exact = ms * sample_rate / 1000.0
    samples = int(round(exact))
    if samples <= 0 or abs(exact - samples) > 1e-6:
        raise ValidationError(
            f"{ms} ms is not a positive whole number of samples at {sample_rate} Hz"
        )
    return samples


def n_frames(n_samples: int, hop: int) -> int:
    """Number of analysis frames for a signal: one frame per started hop."""
    return max(1, -(-n_samples // hop))


def midi_to_hz(midi: Any) -> Any:
    """Convert (possibly fractional) MIDI note numbers to frequency in Hz."""
    return 440.0 * 2.0 ** ((np.asarray(midi, dtype=np.float64) - 69.0) / 12.0)


def encode_array(array: np.ndarray) -> dict[str, Any]:
    """Encode an array as a little-endian float64 base64 blob with its shape."""
    data = np.ascontiguousarray(array, dtype="<f8")
    return {
        "shape": list(data.shape),
        "data": base64.b64encode(data.tobytes()).decode("ascii"),
    }


def decode_array(blob: Any, kind: str, field: str) -> np.ndarray:
    """Decode a blob written by encode_array, validating shape and finiteness."""
    if not isinstance(blob, dict) or "shape" not in blob or "data" not in blob:
        raise SchemaError(kind, field, "is not an array blob")
    shape = blob["shape"]
    if not isinstance(shape, list) or not all(
        isinstance(s, int) and s >= 0 for s in shape
    ):
        raise SchemaError(kind, field, "has an invalid shape")
    try:
        raw = base64.b64decode(blob["data"], validate=True)
    except (ValueError, TypeError) as e:
        raise SchemaError(kind, field, f"is not valid base64 ({e})") from e
    expected = int(np.prod(shape)) * 8
    if len(raw) != expected:
        raise SchemaError(
            kind, field, f"holds {len(raw)} bytes, shape {shape} needs {expected}"
        )
    array = np.frombuffer(raw, dtype="<f8").reshape(shape).astype(np.float64)
    if not np.all(np.isfinite(array)):
        raise SchemaError(kind, field, "contains non-finite values")
    return array


def dump_json(document: dict[str, Any]) -> str:
    """Serialize a document deterministically (stable key order, fixed indent)."""
    return json.dumps(document, indent=2, sort_keys=True) + "\n"


def write_text_atomic(path: Path, text: str) -> None:
    """Write a file via a temporary sibling and rename, so readers never see
    a partial file."""
    path.parent.mkdir(parents=True, exist_ok=True)
    temp_file = path.with_suffix(path.suffix + ".tmp")
    temp_file.write_text(text)
    temp_file.replace(path)


def read_json(path: Path, kind: str) -> Any:
    """Read a JSON document, turning parse failures into schema errors."""
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as e:
        raise ValidationError(f"{kind}: file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise SchemaError(kind, "<document>", f"is not valid JSON ({e})") from e


class PerformanceTracker:
    """Simple wall-clock tracking for pipeline phases."""

    def __init__(self) -> None:
        self.times: dict[str, float] = {}
        self.start_times: dict[str, float] = {}

    def start(self, operation: str) -> None:
        """Start timing an operation."""
        self.start_times[operation] = time.perf_counter()

    def end(self, operation: str) -> float:
        """End timing an operation and return duration."""
        started: Optional[float] = self.start_times.pop(operation, None)
        if started is None:
            return 0.0
        duration = time.perf_counter() - started
        self.times[operation] = self.times.get(operation, 0.0) + duration
        return duration

    def get_summary(self) -> str:
        """Get a summary of all timed operations."""
        if not self.times:
            return "No operations timed"

        total = sum(self.times.values())
        lines = [f"Performance Summary (total: {total:.3f}s)"]
        for op, duration in sorted(
            self.times.items(), key=lambda x: x[1], reverse=True
        ):
            lines.append(f"  {op}: {duration:.3f}s")

        return "\n".join(lines)
