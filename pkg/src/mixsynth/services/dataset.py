"""Training-set loading: WAV clips with optional parameter sidecars."""

import logging
from pathlib import Path
from typing import Optional, Union

from ..core.errors import ValidationError
from ..nets.model import SynthModel
from ..optim.pretrain import TrainingClip, prepare_clip
from .paramfile import load_params
from .wavio import read_wav

logger = logging.getLogger(__name__)

SIDECAR_SUFFIX = ".params.json"


def sidecar_path(wav_path: Path) -> Path:
    return wav_path.with_suffix(SIDECAR_SUFFIX)


def load_training_clips(
    data_dir: Union[str, Path], model: SynthModel, clip_seconds: Optional[float] = None
) -> list[TrainingClip]:
    """Every *.wav in data_dir (sorted) with its sidecar f0 when present.

    Clips without a sidecar get an autocorrelation F0 estimate. Clips shorter
    than clip_seconds are zero-padded up to it.
    """
    data_dir = Path(data_dir)
    if not data_dir.is_dir():
        raise ValidationError(f"training data directory {data_dir} does not exist")
    wavs = sorted(data_dir.glob("*.wav"))
    if not wavs:
        raise ValidationError(f"no .wav files in {data_dir}", "run `mixsynth gen` to create some")

    clip_samples = (
        int(round(clip_seconds * model.config.sample_rate)) if clip_seconds else None
    )
    clips = []
    for wav in wavs:
        f0 = None
        sidecar = sidecar_path(wav)
        if sidecar.exists():
            params = load_params(sidecar)
            if params.hop_ms != model.config.hop_ms:
                raise ValidationError(
                    f"{sidecar}: hop {params.hop_ms} ms differs from "
                    f"the model's {model.config.hop_ms} ms"
                )
            f0 = params.sources[0].f0
        else:
            logger.info("No sidecar for %s, estimating f0", wav.name)
        clips.append(prepare_clip(read_wav(wav), model, f0, clip_samples, name=wav.stem))
    logger.info("Loaded %d training clips from %s", len(clips), data_dir)
    return clips
