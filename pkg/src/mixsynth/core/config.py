"""Configuration management for mixsynth."""

import copy
import logging
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Optional

from .errors import ConfigError

logger = logging.getLogger(__name__)

CONFIG_FILENAME = "mixsynth.yaml"
FREE_VARIABLES = ("f0", "z", "loudness")


@dataclass
class ModelConfig:
    """Architecture and framing of a source synthesizer."""

    sample_rate: int = 16000
    hop_ms: float = 32.0
    frame_ms: float = 64.0
    n_harmonics: int = 64
    n_noise_bands: int = 65
    latent_dim: int = 16
    decoder_hidden: list[int] = field(default_factory=lambda: [256, 256, 256])
    encoder_hidden: int = 128
    encoder_mels: int = 64
    encoder_mfcc: int = 30
    reverb: bool = False
    reverb_length: int = 8000


@dataclass
class FitSettings:
    """Defaults for the mixture fitting step."""

    iterations: int = 3000
    schedule: list[list[float]] = field(
        default_factory=lambda: [[0, 0.1], [1000, 0.01], [2000, 0.001]]
    )
    loss_windows_ms: list[float] = field(
        default_factory=lambda: [8.0, 16.0, 32.0, 64.0, 128.0, 256.0]
    )
    free: list[str] = field(default_factory=lambda: list(FREE_VARIABLES))
    l_high: float = -6.0
    l_low: float = -10.0
    fallback_pitch: float = 60.0
    seed: int = 0
    log_every: int = 100


@dataclass
class TrainSettings:
    """Defaults for autoencoder pretraining."""

    epochs: int = 3000
    lr: float = 0.001
    clip_norm: float = 100.0
    clip_seconds: float = 12.0
    loss_windows_ms: list[float] = field(
        default_factory=lambda: [8.0, 16.0, 32.0, 64.0, 128.0, 256.0]
    )
    seed: int = 0
    log_every: int = 10


@dataclass
class EvalSettings:
    """Evaluation metric configuration."""

    mfcc_frame_ms: float = 128.0
    mfcc_hop_ms: float = 32.0
    mfcc_mels: int = 128
    mfcc_fmin: float = 20.0
    mfcc_fmax: float = 8000.0
    n_mfcc: int = 30
    active_margin_db: float = 1.0


# Keys whose values must be strictly positive numbers.
_POSITIVE = {
    "hop_ms",
    "frame_ms",
    "n_harmonics",
    "n_noise_bands",
    "latent_dim",
    "encoder_hidden",
    "encoder_mels",
    "encoder_mfcc",
    "reverb_length",
    "iterations",
    "epochs",
    "lr",
    "clip_norm",
    "clip_seconds",
    "log_every",
    "mfcc_frame_ms",
    "mfcc_hop_ms",
    "mfcc_mels",
    "n_mfcc",
}


class Config:
    """Load and manage mixsynth configuration from mixsynth.yaml."""

    def __init__(
        self, config_path: Optional[Path] = None, search_dir: Optional[Path] = None
    ):
        """Initialize configuration with defaults.

        Args:
            config_path: Explicit YAML file. Read errors are fatal.
            search_dir: Directory searched for mixsynth.yaml when no explicit
                        path is given. If None, uses current working directory.
        """
        self.model = ModelConfig()
        self.fit = FitSettings()
        self.train = TrainSettings()
        self.eval = EvalSettings()
        self.source: Optional[Path] = None

        self._load_from_yaml(config_path, search_dir)

    def _load_from_yaml(
        self, config_path: Optional[Path], search_dir: Optional[Path]
    ) -> None:
        """Load configuration sections from a YAML file.

        Args:
            config_path: Explicit file, or None to search for mixsynth.yaml
            search_dir: Directory to search when config_path is None
        """
        import yaml

        explicit = config_path is not None
        if config_path is None:
            config_dir = search_dir if search_dir else Path.cwd()
            config_path = config_dir / CONFIG_FILENAME
            if not config_path.exists():
                return  # No config file - use defaults

        try:
            document = yaml.safe_load(Path(config_path).read_text())
        except (OSError, yaml.YAMLError) as e:
            if explicit:
                raise ConfigError(
                    f"cannot read config {config_path}: {e}",
                    "check the path and YAML syntax",
                ) from e
            logger.warning("Ignoring unreadable config %s: %s", config_path, e)
            return

        if not document:
            return  # Empty config file - use defaults
        if not isinstance(document, dict):
            if explicit:
                raise ConfigError(f"config {config_path} must be a mapping")
            logger.warning("Ignoring config %s: top level is not a mapping", config_path)
            return

        self.source = Path(config_path)
        for section_name, target in (
            ("model", self.model),
            ("fit", self.fit),
            ("train", self.train),
            ("eval", self.eval),
        ):
            section = document.get(section_name)
            if section is None:
                continue
            if not isinstance(section, dict):
                logger.warning("Config section '%s' is not a mapping", section_name)
                continue
            _apply_section(section_name, target, section)

        unknown = set(document) - {"model", "fit", "train", "eval"}
        for name in sorted(unknown):
            logger.warning("Unknown config section '%s' ignored", name)


def _apply_section(section_name: str, target: Any, values: dict[str, Any]) -> None:
    """Copy validated values onto a settings dataclass, skipping bad entries."""
    known = {f.name: f for f in fields(target)}
    for key, value in values.items():
        if key not in known:
            logger.warning("Unknown config key '%s.%s' ignored", section_name, key)
            continue
        current = getattr(target, key)
        checked = _check_value(key, current, value)
        if checked is None:
            logger.warning(
                "Invalid value for '%s.%s': %r (keeping %r)",
                section_name,
                key,
                value,
                current,
            )
            continue
        setattr(target, key, checked)


def _check_value(key: str, current: Any, value: Any) -> Any:
    """Return value coerced to the type of current, or None when invalid."""
    if isinstance(current, bool):
        return value if isinstance(value, bool) else None
    if isinstance(current, int):
        if isinstance(value, bool) or not isinstance(value, int):
            return None
        if key in _POSITIVE and value <= 0:
            return None
        return value
    if isinstance(current, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            return None
        if key in _POSITIVE and value <= 0:
            return None
        return float(value)
    if isinstance(current, list):
        if not isinstance(value, list) or not value:
            return None
        if key == "free":
            if not all(v in FREE_VARIABLES for v in value):
                return None
            return list(value)
        if key == "schedule":
            return _check_schedule(value)
        if key in ("decoder_hidden",):
            if all(isinstance(v, int) and not isinstance(v, bool) and v > 0 for v in value):
                return list(value)
            return None
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0 for v in value):
            return [float(v) for v in value]
        return None
    return copy.deepcopy(value)


def _check_schedule(value: list[Any]) -> Optional[list[list[float]]]:
    """Validate a learning-rate schedule of strictly increasing (step, rate)."""
    schedule: list[list[float]] = []
    previous = -1.0
    for entry in value:
        if not isinstance(entry, (list, tuple)) or len(entry) != 2:
            return None
        step, rate = entry
        if not isinstance(step, int) or not isinstance(rate, (int, float)):
            return None
        if step <= previous or rate <= 0:
            return None
        schedule.append([step, float(rate)])
        previous = step
    if schedule[0][0] != 0:
        return None
    return schedule
