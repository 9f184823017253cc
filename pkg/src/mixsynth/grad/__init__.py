"""Reverse-mode automatic differentiation for the synthesizer, networks and loss."""

from . import ops
from .check import grad_check
from .graph import DiffGraph, DiffValue, Node, backward
from .ops import record

__all__ = [
    "DiffGraph",
    "DiffValue",
    "Node",
    "backward",
    "grad_check",
    "ops",
    "record",
]
