"""Network building blocks expressed with grad primitives."""

from typing import Mapping

import numpy as np

from ..grad import ops
from ..grad.graph import DiffValue

LAYER_NORM_EPS = 1e-5


def dense(x: DiffValue, params: Mapping[str, DiffValue], name: str) -> DiffValue:
    return ops.affine(x, params[f"{name}.weight"], params[f"{name}.bias"])


def layer_norm(x: DiffValue, params: Mapping[str, DiffValue], name: str) -> DiffValue:
    """Normalize each row to zero mean and unit variance, then scale and shift."""
    centered = x - ops.mean(x, axis=-1, keepdims=True)
    variance = ops.mean(centered * centered, axis=-1, keepdims=True)
    normalized = centered * ops.power(variance + LAYER_NORM_EPS, -0.5)
    return normalized * params[f"{name}.gain"] + params[f"{name}.bias"]


def exp_sigmoid(x: DiffValue, max_value: float = 2.0, floor: float = 1e-7) -> DiffValue:
    """Strictly positive squashing: max_value * sigmoid(x) ** ln(10) + floor."""
    return ops.power(ops.sigmoid(x), float(np.log(10.0))) * max_value + floor


def hidden_stack(
    x: DiffValue, params: Mapping[str, DiffValue], prefix: str, depth: int
) -> DiffValue:
    """depth x (dense -> layer norm -> softplus)."""
    for i in range(depth):
        x = dense(x, params, f"{prefix}.hidden{i}")
        x = layer_norm(x, params, f"{prefix}.norm{i}")
        x = ops.softplus(x)
    return x


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))
