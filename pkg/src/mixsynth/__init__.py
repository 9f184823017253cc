"""mixsynth: differentiable source synthesizers fitted to polyphonic mixtures."""

__version__ = "0.1.0"
__description__ = (
    "Score-informed analysis-by-synthesis of music mixtures with DDSP source models"
)
