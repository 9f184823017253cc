"""R source synthesizers summed into one mixture."""

from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from ..core.config import FREE_VARIABLES
from ..core.errors import ValidationError
from ..core.utils import n_frames
from ..dsp.framing import AudioLike, as_samples
from ..dsp.spectral import StftConfig
from ..grad.graph import DiffGraph, DiffValue
from ..nets.model import SynthModel, SynthParams, decode_op
from ..synth import FrameGrid, synthesize
from .loss import spectral_loss


@dataclass
class MixtureState:
    """Per-source parameters and models; models may alias one shared instance."""

    sources: list[SynthParams]
    models: list[SynthModel]
    n_samples: int
    seed: int = 0
    source_seeds: Optional[list[int]] = None
    grid: FrameGrid = field(init=False)

    def __post_init__(self) -> None:
        if not self.sources:
            raise ValidationError("a mixture needs at least one source")
        if len(self.models) == 1 and len(self.sources) > 1:
            self.models = self.models * len(self.sources)
        if len(self.models) != len(self.sources):
            raise ValidationError(
                f"{len(self.sources)} sources but {len(self.models)} models",
                "pass one shared model or one model per source",
            )
        grids = {FrameGrid.from_config(m.config) for m in self.models}
        if len(grids) != 1:
            raise ValidationError("all source models must share sample rate and framing")
        self.grid = grids.pop()

        expected_t = n_frames(self.n_samples, self.grid.hop)
        for r, (params, model) in enumerate(zip(self.sources, self.models)):
            if params.n_frames != expected_t:
                raise ValidationError(
                    f"source {r} has {params.n_frames} frames, "
                    f"{self.n_samples} samples need {expected_t}"
                )
            if params.latent_dim != model.config.latent_dim:
                raise ValidationError(
                    f"source {r} has D={params.latent_dim}, "
                    f"its model expects D={model.config.latent_dim}"
                )
        if self.source_seeds is None:
            self.source_seeds = [self.seed + r for r in range(len(self.sources))]
        elif len(self.source_seeds) != len(self.sources):
            raise ValidationError("source_seeds must give one seed per source")

    @property
    def n_sources(self) -> int:
        return len(self.sources)

    @property
    def n_frames(self) -> int:
        return self.sources[0].n_frames


@dataclass
class MixtureGraph:
    """One recorded forward pass: per-source parameter leaves, stems, mixture."""

    graph: DiffGraph
    leaves: list[dict[str, DiffValue]]
    stems: list[DiffValue]
    mixture: DiffValue
    loss: Optional[DiffValue] = None


def render_mixture(
    state: MixtureState, free: Iterable[str] = (), graph: Optional[DiffGraph] = None
) -> MixtureGraph:
    """Record decode -> synthesize for every source and sum the stems.

    Variables named in `free` become gradient-receiving leaves; model weights
    are always constants here. Stems are summed in ascending source order.
    """
    free = set(free)
    unknown = free - set(FREE_VARIABLES)
    if unknown:
        raise ValidationError(f"unknown free variables {sorted(unknown)}")
    graph = graph if graph is not None else DiffGraph()
    bound: dict[int, dict[str, DiffValue]] = {}
    leaves: list[dict[str, DiffValue]] = []
    stems: list[DiffValue] = []

    for params, model, seed in zip(state.sources, state.models, state.source_seeds or []):
        if id(model) not in bound:
            bound[id(model)] = model.bind(graph)
        weights = bound[id(model)]
        source_leaves = {
            name: (graph.variable if name in free else graph.constant)(getattr(params, name))
            for name in FREE_VARIABLES
        }
        controls = decode_op(
            source_leaves["f0"],
            source_leaves["z"],
            source_leaves["loudness"],
            weights,
            model.config,
        )
        reverb = model.reverb(weights)
        stems.append(
            synthesize(source_leaves["f0"], controls, reverb, state.n_samples, seed, state.grid)
        )
        leaves.append(source_leaves)

    mixture = stems[0]
    for stem in stems[1:]:
        mixture = mixture + stem
    return MixtureGraph(graph, leaves, stems, mixture)


def synthesize_mixture(state: MixtureState) -> tuple[np.ndarray, list[np.ndarray]]:
    """Mixture samples and the stems it is the exact ordered sum of."""
    rendered = render_mixture(state)
    return rendered.mixture.data, [stem.data for stem in rendered.stems]


def build_loss_graph(
    state: MixtureState,
    observed: AudioLike,
    cfg: Optional[StftConfig] = None,
    free: Iterable[str] = FREE_VARIABLES,
) -> MixtureGraph:
    """render_mixture plus the spectral loss against the observed mixture."""
    samples = as_samples(observed)
    if samples.shape[0] != state.n_samples:
        raise ValidationError(
            f"observed mixture has {samples.shape[0]} samples, model renders {state.n_samples}"
        )
    rendered = render_mixture(state, free)
    rendered.loss = spectral_loss(samples, rendered.mixture, cfg)
    return rendered


def mixture_loss(
    state: MixtureState, observed: AudioLike, cfg: Optional[StftConfig] = None
) -> DiffValue:
    """Scalar loss L(y, y_hat), differentiable w.r.t. every parameter entry."""
    loss = build_loss_graph(state, observed, cfg).loss
    assert loss is not None
    return loss
