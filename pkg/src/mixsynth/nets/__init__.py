"""Learned components: timbre encoder, control decoder, model files."""

from .model import (
    SynthModel,
    SynthParams,
    decode,
    decode_op,
    encode_timbre,
    encode_timbre_op,
    encoder_features,
    expected_shapes,
    init_model,
)
from .serialization import MODEL_FORMAT, load_model, save_model

__all__ = [
    "MODEL_FORMAT",
    "SynthModel",
    "SynthParams",
    "decode",
    "decode_op",
    "encode_timbre",
    "encode_timbre_op",
    "encoder_features",
    "expected_shapes",
    "init_model",
    "load_model",
    "save_model",
]
