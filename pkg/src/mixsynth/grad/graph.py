"""Recorded computation graph and differentiable values.

A DiffGraph is an append-only list of primitive operations. Because every
operation is recorded after its operands exist, the list order is already a
topological order and the backward pass is a single reverse sweep.
"""

from dataclasses import dataclass
from typing import Any, Callable, Optional, Union

import numpy as np

from ..core.errors import ValidationError

VJP = Callable[[np.ndarray], tuple[Optional[np.ndarray], ...]]


@dataclass(frozen=True)
class Node:
    """One recorded primitive: operand ids, output id and its local gradient rule."""

    kind: str
    inputs: tuple[int, ...]
    output: int
    vjp: VJP


class DiffValue:
    """Array value living in a DiffGraph.

    `grad` reads as zeros until a backward pass reaches this value.
    """

    __slots__ = ("data", "graph", "node_id", "requires_grad", "_grad")

    def __init__(
        self, data: np.ndarray, graph: "DiffGraph", node_id: int, requires_grad: bool
    ):
        self.data = data
        self.graph = graph
        self.node_id = node_id
        self.requires_grad = requires_grad
        self._grad: Optional[np.ndarray] = None

    @property
    def grad(self) -> np.ndarray:
        if self._grad is None:
            return np.zeros_like(self.data)
        return self._grad

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def ndim(self) -> int:
        return int(self.data.ndim)

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def T(self) -> "DiffValue":
        from . import ops

        return ops.transpose(self)

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def sum(self, axis: Optional[int] = None, keepdims: bool = False) -> "DiffValue":
        from . import ops

        return ops.sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis: Optional[int] = None, keepdims: bool = False) -> "DiffValue":
        from . import ops

        return ops.mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape: int) -> "DiffValue":
        from . import ops

        return ops.reshape(self, shape[0] if len(shape) == 1 else shape)

    def __add__(self, other: "Operand") -> "DiffValue":
        from . import ops

        return ops.add(self, other)

    def __radd__(self, other: "Operand") -> "DiffValue":
        from . import ops

        return ops.add(other, self)

    def __sub__(self, other: "Operand") -> "DiffValue":
        from . import ops

        return ops.sub(self, other)

    def __rsub__(self, other: "Operand") -> "DiffValue":
        from . import ops

        return ops.sub(other, self)

    def __mul__(self, other: "Operand") -> "DiffValue":
        from . import ops

        return ops.mul(self, other)

    def __rmul__(self, other: "Operand") -> "DiffValue":
        from . import ops

        return ops.mul(other, self)

    def __truediv__(self, other: "Operand") -> "DiffValue":
        from . import ops

        return ops.div(self, other)

    def __rtruediv__(self, other: "Operand") -> "DiffValue":
        from . import ops

        return ops.div(other, self)

    def __neg__(self) -> "DiffValue":
        from . import ops

        return ops.neg(self)

    def __pow__(self, exponent: float) -> "DiffValue":
        from . import ops

        return ops.power(self, exponent)

    def __matmul__(self, other: "Operand") -> "DiffValue":
        from . import ops

        return ops.matmul(self, other)

    def __getitem__(self, index: Any) -> "DiffValue":
        from . import ops

        return ops.getitem(self, index)

    def __repr__(self) -> str:
        return f"DiffValue(shape={self.shape}, node={self.node_id})"


Operand = Union[DiffValue, np.ndarray, float, int]


class DiffGraph:
    """Ordered record of primitive operations for reverse-mode gradients."""

    def __init__(self) -> None:
        self.nodes: list[Node] = []
        self.values: list[DiffValue] = []

    def __len__(self) -> int:
        return len(self.nodes)

    def _new_value(self, data: Any, requires_grad: bool) -> DiffValue:
        array = np.array(data, dtype=np.float64)
        value = DiffValue(array, self, len(self.values), requires_grad)
        self.values.append(value)
        return value

    def variable(self, data: Any) -> DiffValue:
        """Leaf value that receives a gradient."""
        return self._new_value(data, requires_grad=True)

    def constant(self, data: Any) -> DiffValue:
        """Leaf value treated as fixed w.r.t. differentiation."""
        return self._new_value(data, requires_grad=False)

    def record(
        self, kind: str, operands: list[DiffValue], data: np.ndarray, vjp: VJP
    ) -> DiffValue:
        """Append one primitive with its already-computed output."""
        for operand in operands:
            if operand.graph is not self:
                raise ValidationError(f"{kind}: operand belongs to another graph")
        requires_grad = any(o.requires_grad for o in operands)
        output = DiffValue(
            np.asarray(data, dtype=np.float64), self, len(self.values), requires_grad
        )
        self.values.append(output)
        self.nodes.append(
            Node(kind, tuple(o.node_id for o in operands), output.node_id, vjp)
        )
        return output

    def backward(self, loss: DiffValue) -> None:
        """Populate grad of every value reachable from a scalar loss."""
        if loss.graph is not self:
            raise ValidationError("backward: loss belongs to another graph")
        if loss.size != 1:
            raise ValidationError(
                f"backward: loss must be scalar, got shape {loss.shape}"
            )

        for value in self.values:
            value._grad = None
        loss._grad = np.ones_like(loss.data)

        for node in reversed(self.nodes):
            output = self.values[node.output]
            if output._grad is None or not output.requires_grad:
                continue
            input_grads = node.vjp(output._grad)
            for input_id, input_grad in zip(node.inputs, input_grads):
                if input_grad is None:
                    continue
                target = self.values[input_id]
                if not target.requires_grad:
                    continue
                if target._grad is None:
                    target._grad = np.array(input_grad, dtype=np.float64)
                else:
                    target._grad = target._grad + input_grad


def backward(loss: DiffValue) -> None:
    """Run the backward pass of the graph owning loss."""
    loss.graph.backward(loss)
