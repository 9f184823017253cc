"""Mixture of source synthesizers and its spectral loss."""

from .loss import spectral_loss
from .model import (
    MixtureGraph,
    MixtureState,
    build_loss_graph,
    mixture_loss,
    render_mixture,
    synthesize_mixture,
)

__all__ = [
    "MixtureGraph",
    "MixtureState",
    "build_loss_graph",
    "mixture_loss",
    "render_mixture",
    "spectral_loss",
    "synthesize_mixture",
]
