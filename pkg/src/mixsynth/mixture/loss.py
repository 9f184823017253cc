"""Multiscale spectral loss."""

from typing import Optional

from ..core.errors import ShapeError
from ..dsp.spectral import StftConfig, stft_magnitude_op
from ..grad import ops
from ..grad.graph import DiffGraph, DiffValue, Operand

LOSS_LOG_FLOOR = 1e-6


def spectral_loss(
    target: Operand, estimate: Operand, cfg: Optional[StftConfig] = None
) -> DiffValue:
    """Sum over resolutions of L1 magnitude and L1 log-magnitude distances.

    Both signals go through the same ops, so identical inputs give exactly
    zero and swapping them gives exactly the same value.
    """
    cfg = cfg if cfg is not None else StftConfig()
    graph = _owning_graph(target, estimate)
    y = target if isinstance(target, DiffValue) else graph.constant(target)
    y_hat = estimate if isinstance(estimate, DiffValue) else graph.constant(estimate)
    if y.ndim != 1 or y.shape != y_hat.shape:
        raise ShapeError("spectral_loss", y.shape, y_hat.shape)

    terms = []
    for frame_length, hop in cfg.resolutions:
        mag = stft_magnitude_op(y, frame_length, hop)
        mag_hat = stft_magnitude_op(y_hat, frame_length, hop)
        terms.append(ops.l1_distance(mag, mag_hat))
        terms.append(
            ops.l1_distance(
                ops.log(mag, floor=LOSS_LOG_FLOOR), ops.log(mag_hat, floor=LOSS_LOG_FLOOR)
            )
        )
    total = terms[0]
    for term in terms[1:]:
        total = total + term
    return total


def _owning_graph(*operands: Operand) -> DiffGraph:
    for operand in operands:
        if isinstance(operand, DiffValue):
            return operand.graph
    return DiffGraph()
