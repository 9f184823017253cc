"""Core configuration, errors, utilities and the command base class."""

from .base_command import BaseCommand, CommandParser, UsageError
from .config import Config, EvalSettings, FitSettings, ModelConfig, TrainSettings
from .errors import (
    AudioFormatError,
    ConfigError,
    DivergenceError,
    MixsynthError,
    NonFiniteGradientError,
    RuntimeFailure,
    SchemaError,
    ScoreError,
    ShapeError,
    ValidationError,
)
from .utils import PerformanceTracker

__all__ = [
    "AudioFormatError",
    "BaseCommand",
    "CommandParser",
    "Config",
    "ConfigError",
    "DivergenceError",
    "EvalSettings",
    "FitSettings",
    "MixsynthError",
    "ModelConfig",
    "NonFiniteGradientError",
    "PerformanceTracker",
    "RuntimeFailure",
    "SchemaError",
    "ScoreError",
    "ShapeError",
    "TrainSettings",
    "UsageError",
    "ValidationError",
]
