"""Convolution reverb with a fixed dry tap."""

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from ..core.errors import ValidationError
from ..grad import ops
from ..grad.graph import DiffValue


@dataclass(frozen=True)
class ReverbIR:
    """Impulse response; the first tap is treated as 1 whenever enabled.

    The response is either an array or a graph value (a trained IR).
    """

    impulse_response: Union[np.ndarray, DiffValue]
    enabled: bool = True

    def __post_init__(self) -> None:
        ir = self.impulse_response
        if not isinstance(ir, DiffValue):
            ir = np.asarray(ir, dtype=np.float64)
            object.__setattr__(self, "impulse_response", ir)
        if len(ir.shape) != 1 or ir.shape[0] < 1:
            raise ValidationError(f"impulse response must be a non-empty vector, got {ir.shape}")

    @classmethod
    def disabled(cls, length: int = 1) -> "ReverbIR":
        ir = np.zeros(length)
        ir[0] = 1.0
        return cls(ir, enabled=False)


def dry_tapped(ir: DiffValue) -> DiffValue:
    """Replace the first tap by a constant 1."""
    return ops.concat([np.ones(1), ops.getitem(ir, slice(1, None))])


def apply_reverb(x: DiffValue, reverb: Optional[ReverbIR]) -> DiffValue:
    """Linear convolution with the impulse response, truncated to len(x).

    A missing or disabled reverb returns x unchanged.
    """
    if reverb is None or not reverb.enabled:
        return x
    ir = reverb.impulse_response
    if not isinstance(ir, DiffValue):
        ir = x.graph.constant(ir)
    return ops.convolve(x, dry_tapped(ir), length=x.shape[0])
