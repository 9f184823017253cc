"""Parameter files: per-source f0, z and loudness with a consistency header."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Union

from ..core.errors import SchemaError, ValidationError
from ..core.utils import (
    SAMPLE_RATE,
    decode_array,
    dump_json,
    encode_array,
    read_json,
    write_text_atomic,
)
from ..nets.model import SynthParams

logger = logging.getLogger(__name__)

PARAMS_FORMAT = "mixsynth-params/1"
_KIND = "params"
_HEADER_KEYS = ("sample_rate", "hop_ms", "n_frames", "latent_dim", "n_sources")


@dataclass
class ParamFile:
    """SynthParams of R sources sharing one frame grid."""

    sources: list[SynthParams]
    hop_ms: float = 32.0
    sample_rate: int = SAMPLE_RATE
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.sources:
            raise ValidationError("a parameter file needs at least one source")
        first = self.sources[0]
        for r, params in enumerate(self.sources):
            if params.n_frames != first.n_frames or params.latent_dim != first.latent_dim:
                raise ValidationError(
                    f"source {r} has T={params.n_frames}, D={params.latent_dim}; "
                    f"source 0 has T={first.n_frames}, D={first.latent_dim}"
                )

    @property
    def n_frames(self) -> int:
        return self.sources[0].n_frames

    @property
    def latent_dim(self) -> int:
        return self.sources[0].latent_dim

    @property
    def n_sources(self) -> int:
        return len(self.sources)

    def header(self) -> dict[str, Any]:
        return {
            "sample_rate": self.sample_rate,
            "hop_ms": self.hop_ms,
            "n_frames": self.n_frames,
            "latent_dim": self.latent_dim,
            "n_sources": self.n_sources,
        }

    def to_document(self) -> dict[str, Any]:
        return {
            "format": PARAMS_FORMAT,
            "header": self.header(),
            "metadata": self.metadata,
            "sources": [
                {
                    "f0": encode_array(p.f0),
                    "z": encode_array(p.z),
                    "loudness": encode_array(p.loudness),
                }
                for p in self.sources
            ],
        }

    @classmethod
    def from_document(cls, document: Any) -> "ParamFile":
        if not isinstance(document, dict):
            raise SchemaError(_KIND, "<document>", "is not a JSON object")
        if document.get("format") != PARAMS_FORMAT:
            raise SchemaError(
                _KIND, "format", f"is {document.get('format')!r}, expected {PARAMS_FORMAT!r}"
            )
        header = document.get("header")
        if not isinstance(header, dict):
            raise SchemaError(_KIND, "header", "is not a mapping")
        for key in _HEADER_KEYS:
            value = header.get(key)
            if not isinstance(value, (int, float)) or isinstance(value, bool) or value <= 0:
                raise SchemaError(_KIND, f"header.{key}", f"has invalid value {value!r}")
        metadata = document.get("metadata", {})
        if not isinstance(metadata, dict):
            raise SchemaError(_KIND, "metadata", "is not a mapping")
        raw_sources = document.get("sources")
        if not isinstance(raw_sources, list) or len(raw_sources) != header["n_sources"]:
            raise SchemaError(
                _KIND, "sources", f"must list header.n_sources={header['n_sources']} entries"
            )

        t, d = header["n_frames"], header["latent_dim"]
        expected = {"f0": (t,), "z": (t, d), "loudness": (t,)}
        sources = []
        for r, raw in enumerate(raw_sources):
            if not isinstance(raw, dict):
                raise SchemaError(_KIND, f"sources[{r}]", "is not an object")
            arrays = {}
            for name, shape in expected.items():
                array = decode_array(raw.get(name), _KIND, f"sources[{r}].{name}")
                if array.shape != shape:
                    raise SchemaError(
                        _KIND,
                        f"sources[{r}].{name}",
                        f"has shape {list(array.shape)}, header implies {list(shape)}",
                    )
                arrays[name] = array
            sources.append(SynthParams(**arrays))
        return cls(
            sources=sources,
            hop_ms=float(header["hop_ms"]),
            sample_rate=int(header["sample_rate"]),
            metadata=dict(metadata),
        )


def save_params(params: ParamFile, path: Union[str, Path]) -> None:
    write_text_atomic(Path(path), dump_json(params.to_document()))
    logger.debug("Wrote %d sources x %d frames to %s", params.n_sources, params.n_frames, path)


def load_params(path: Union[str, Path]) -> ParamFile:
    return ParamFile.from_document(read_json(Path(path), _KIND))
