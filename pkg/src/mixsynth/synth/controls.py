"""Decoder outputs and the frame grid they live on."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..core.config import ModelConfig
from ..core.errors import ShapeError, ValidationError
from ..core.utils import ms_to_samples
from ..grad.graph import DiffGraph, DiffValue, Operand


@dataclass(frozen=True)
class FrameGrid:
    """Control frame t is anchored at sample center + hop * t."""

    hop: int
    center: int
    sample_rate: int = 16000

    @classmethod
    def from_config(cls, config: ModelConfig) -> "FrameGrid":
        frame_length = ms_to_samples(config.frame_ms, config.sample_rate)
        return cls(
            hop=ms_to_samples(config.hop_ms, config.sample_rate),
            center=frame_length // 2,
            sample_rate=config.sample_rate,
        )


@dataclass(frozen=True)
class ControlSignals:
    """Per-frame synthesizer controls.

    amplitude is (T,), distribution is (T, K) with rows on the simplex,
    noise is (T, M) nonnegative filter magnitudes.
    """

    amplitude: DiffValue
    distribution: DiffValue
    noise: DiffValue

    def __post_init__(self) -> None:
        n = self.amplitude.shape[0] if self.amplitude.ndim == 1 else -1
        if (
            n < 1
            or self.distribution.ndim != 2
            or self.noise.ndim != 2
            or self.distribution.shape[0] != n
            or self.noise.shape[0] != n
        ):
            raise ShapeError(
                "controls",
                self.amplitude.shape,
                self.distribution.shape,
                self.noise.shape,
            )
        graph = self.amplitude.graph
        if self.distribution.graph is not graph or self.noise.graph is not graph:
            raise ValidationError("control signals must share one graph")

    @classmethod
    def from_arrays(
        cls,
        amplitude: np.ndarray,
        distribution: np.ndarray,
        noise: np.ndarray,
        graph: Optional[DiffGraph] = None,
    ) -> "ControlSignals":
        """Wrap fixed arrays as graph constants."""
        graph = graph if graph is not None else DiffGraph()
        return cls(
            graph.constant(amplitude), graph.constant(distribution), graph.constant(noise)
        )

    @property
    def graph(self) -> DiffGraph:
        return self.amplitude.graph

    @property
    def n_frames(self) -> int:
        return self.amplitude.shape[0]

    @property
    def n_harmonics(self) -> int:
        return self.distribution.shape[1]

    @property
    def n_noise_bands(self) -> int:
        return self.noise.shape[1]

    def lift(self, value: Operand) -> DiffValue:
        """Place a raw array on the controls' graph as a constant."""
        if isinstance(value, DiffValue):
            return value
        return self.graph.constant(value)
