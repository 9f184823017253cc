"""Mono 16 kHz WAV reading and writing (PCM16 or float32)."""

import logging
from pathlib import Path
from typing import Union

import numpy as np
import soundfile as sf

from ..core.errors import AudioFormatError
from ..core.utils import SAMPLE_RATE
from ..dsp.framing import AudioBuffer, AudioLike, as_samples

logger = logging.getLogger(__name__)

SUBTYPES = {"float32": "FLOAT", "pcm16": "PCM_16"}
_RESAMPLE_HINT = "convert first, e.g. `sox in.wav -r 16000 -c 1 out.wav`"


def read_wav(path: Union[str, Path]) -> AudioBuffer:
    """Read a mono 16 kHz PCM16 or float32 WAV as float64 samples."""
    path = Path(path)
    if not path.exists():
        raise AudioFormatError(f"{path}: file not found")
    try:
        info = sf.info(str(path))
    except RuntimeError as e:
        raise AudioFormatError(f"{path}: not a readable audio file ({e})") from e

    if info.samplerate != SAMPLE_RATE:
        raise AudioFormatError(
            f"{path}: expected {SAMPLE_RATE} Hz, got {info.samplerate} Hz", _RESAMPLE_HINT
        )
    if info.channels != 1:
        raise AudioFormatError(
            f"{path}: expected mono audio, file has {info.channels} channels", _RESAMPLE_HINT
        )
    if info.subtype not in SUBTYPES.values():
        raise AudioFormatError(
            f"{path}: unsupported sample format {info.subtype}",
            "write the file as 16-bit PCM or 32-bit float",
        )
    samples, _ = sf.read(str(path), dtype="float64", always_2d=False)
    return AudioBuffer(np.asarray(samples, dtype=np.float64))


def write_wav(
    path: Union[str, Path], x: AudioLike, encoding: str = "float32"
) -> None:
    """Write mono 16 kHz audio; encoding is 'float32' (default) or 'pcm16'."""
    if encoding not in SUBTYPES:
        raise AudioFormatError(f"unknown WAV encoding '{encoding}'", "use float32 or pcm16")
    samples = as_samples(x)
    peak = float(np.max(np.abs(samples))) if samples.size else 0.0
    if encoding == "pcm16" and peak > 1.0:
        logger.warning("Clipping %s: peak %.3f exceeds full scale", path, peak)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    sf.write(str(path), samples, SAMPLE_RATE, subtype=SUBTYPES[encoding], format="WAV")
