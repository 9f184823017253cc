"""Helpers shared by the subcommands: model loading and stem rendering."""

import logging
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ..core.errors import ValidationError
from ..mixture.model import MixtureState, synthesize_mixture
from ..nets.model import SynthModel
from ..nets.serialization import load_model
from ..services.paramfile import ParamFile
from ..services.wavio import write_wav

logger = logging.getLogger(__name__)


def load_models(paths: Sequence[Path], n_sources: int) -> list[SynthModel]:
    """One model per source; a single path is shared and each file read once."""
    if len(paths) == 1:
        paths = list(paths) * n_sources
    if len(paths) != n_sources:
        raise ValidationError(
            f"{len(paths)} --model paths for {n_sources} sources",
            "pass --model once (shared) or once per source",
        )
    cache: dict[Path, SynthModel] = {}
    for path in paths:
        if path not in cache:
            cache[path] = load_model(path)
    return [cache[path] for path in paths]


def check_hop(params: ParamFile, models: Sequence[SynthModel]) -> None:
    for r, model in enumerate(models):
        if model.config.hop_ms != params.hop_ms:
            raise ValidationError(
                f"parameters use a {params.hop_ms} ms hop, model {r} uses {model.config.hop_ms} ms"
            )


def render_stems(
    params: ParamFile, models: Sequence[SynthModel], n_samples: int, seed: int
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Mixture and per-source stems of a parameter file."""
    state = MixtureState(list(params.sources), list(models), n_samples, seed)
    return synthesize_mixture(state)


def write_stems(out_dir: Path, stems: Sequence[np.ndarray]) -> list[Path]:
    """stems[r] to out_dir/source_<r>.wav."""
    written = []
    for r, stem in enumerate(stems):
        path = Path(out_dir) / f"source_{r}.wav"
        write_wav(path, stem)
        written.append(path)
    logger.info("Wrote %d stems to %s", len(written), out_dir)
    return written


def params_seed(params: ParamFile, override: Optional[int]) -> int:
    """Noise seed: the flag when given, else the one recorded in the file."""
    if override is not None:
        return override
    seed = params.metadata.get("seed", 0)
    return seed if isinstance(seed, int) and not isinstance(seed, bool) else 0
