"""Model file format: versioned JSON with base64 float64 weight blobs."""

import logging
from dataclasses import asdict, fields
from pathlib import Path
from typing import Any

from ..core.config import ModelConfig
from ..core.errors import SchemaError
from ..core.utils import decode_array, dump_json, encode_array, read_json, write_text_atomic
from .model import SynthModel, expected_shapes

logger = logging.getLogger(__name__)

MODEL_FORMAT = "mixsynth-model/1"
_KIND = "model"


def model_to_document(model: SynthModel) -> dict[str, Any]:
    return {
        "format": MODEL_FORMAT,
        "config": asdict(model.config),
        "weights": {name: encode_array(model.weights[name]) for name in sorted(model.weights)},
    }


def save_model(model: SynthModel, path: Path) -> None:
    """Write a model file; identical weights always produce identical bytes."""
    write_text_atomic(Path(path), dump_json(model_to_document(model)))
    logger.debug("Saved model to %s (%s)", path, model.fingerprint()[:12])


def _config_from_document(raw: Any) -> ModelConfig:
    if not isinstance(raw, dict):
        raise SchemaError(_KIND, "config", "is not a mapping")
    defaults = ModelConfig()
    values: dict[str, Any] = {}
    known = {f.name for f in fields(ModelConfig)}
    for key in raw:
        if key not in known:
            raise SchemaError(_KIND, f"config.{key}", "is not a known setting")
    for name in known:
        if name not in raw:
            raise SchemaError(_KIND, f"config.{name}", "is missing")
        value = raw[name]
        default = getattr(defaults, name)
        if isinstance(default, bool):
            ok = isinstance(value, bool)
        elif isinstance(default, int):
            ok = isinstance(value, int) and not isinstance(value, bool) and value > 0
        elif isinstance(default, float):
            ok = isinstance(value, (int, float)) and not isinstance(value, bool) and value > 0
            value = float(value) if ok else value
        else:
            ok = isinstance(value, list) and all(
                isinstance(v, int) and not isinstance(v, bool) and v > 0 for v in value
            )
        if not ok:
            raise SchemaError(_KIND, f"config.{name}", f"has invalid value {value!r}")
        values[name] = value
    if values["n_noise_bands"] < 2:
        raise SchemaError(_KIND, "config.n_noise_bands", "must be at least 2")
    return ModelConfig(**values)


def model_from_document(document: Any) -> SynthModel:
    """Validate a parsed model document; any problem raises SchemaError."""
    if not isinstance(document, dict):
        raise SchemaError(_KIND, "<document>", "is not a JSON object")
    if document.get("format") != MODEL_FORMAT:
        raise SchemaError(
            _KIND,
            "format",
            f"is {document.get('format')!r}, expected {MODEL_FORMAT!r}",
        )
    config = _config_from_document(document.get("config"))
    raw_weights = document.get("weights")
    if not isinstance(raw_weights, dict):
        raise SchemaError(_KIND, "weights", "is not a mapping")

    expected = expected_shapes(config)
    for name in raw_weights:
        if name not in expected:
            raise SchemaError(_KIND, f"weights.{name}", "is not part of this architecture")
    weights = {}
    for name, shape in expected.items():
        if name not in raw_weights:
            raise SchemaError(_KIND, f"weights.{name}", "is missing")
        array = decode_array(raw_weights[name], _KIND, f"weights.{name}")
        if array.shape != shape:
            raise SchemaError(
                _KIND,
                f"weights.{name}",
                f"has shape {list(array.shape)}, expected {list(shape)}",
                "the file was written for a different K/M/D configuration",
            )
        weights[name] = array
    return SynthModel(config, weights)


def load_model(path: Path) -> SynthModel:
    """Read and validate a model file; nothing is returned on any failure."""
    model = model_from_document(read_json(Path(path), _KIND))
    logger.debug("Loaded model %s (%s)", path, model.fingerprint()[:12])
    return model
