"""Reverse-mode automatic differentiation over float64 numpy arrays.

Operations executed while a ``Graph`` is active are appended to that graph's
tape; ``Graph.backward`` then walks the tape in exact reverse creation order.
Outside a graph the same operations only compute their forward value, which is
how inference runs.

The active graph is thread-local, so forward passes in different threads
never share a tape.
"""

import threading
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from shared.errors import UsageError

VJP = Callable[[np.ndarray], Sequence[np.ndarray | None]]

_local = threading.local()


def _graph_stack() -> list["Graph"]:
    stack = getattr(_local, "stack", None)
    if stack is None:
        stack = []
        _local.stack = stack
    return stack


def current_graph() -> "Graph | None":
    """Return the innermost active graph of this thread, if any."""
    stack = _graph_stack()
    return stack[-1] if stack else None


class Tensor:
    """Dense float64 array with an optional gradient accumulator."""

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad = np.zeros_like(self.data) if requires_grad else None
        self.name = name
        self._graph: Graph | None = None
        self._node: int | None = None

    @classmethod
    def _result(cls, data: np.ndarray, requires_grad: bool) -> "Tensor":
        out = cls.__new__(cls)
        out.data = np.asarray(data, dtype=np.float64)
        out.requires_grad = requires_grad
        out.grad = None
        out.name = None
        out._graph = None
        out._node = None
        return out

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def is_leaf(self) -> bool:
        return self._node is None

    def item(self) -> float:
        if self.data.size != 1:
            raise UsageError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def zero_grad(self) -> None:
        if self.requires_grad:
            self.grad = np.zeros_like(self.data)

    def backward(self) -> None:
        """Backpropagate from this scalar through the graph that produced it."""
        if self._graph is None:
            raise UsageError(
                "backward() called on a tensor that was not produced inside a Graph",
                recovery_hint="Run the forward pass inside 'with Graph() as graph:'.",
            )
        self._graph.backward(self)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{label})"

    # Elementwise arithmetic

    def __add__(self, other) -> "Tensor":
        other = as_tensor(other)
        a, b = self, other

        def vjp(g):
            return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

        return emit("add", a.data + b.data, (a, b), vjp)

    __radd__ = __add__

    def __sub__(self, other) -> "Tensor":
        other = as_tensor(other)
        a, b = self, other

        def vjp(g):
            return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

        return emit("sub", a.data - b.data, (a, b), vjp)

    def __rsub__(self, other) -> "Tensor":
        return as_tensor(other) - self

    def __mul__(self, other) -> "Tensor":
        other = as_tensor(other)
        a, b = self, other

        def vjp(g):
            return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

        return emit("mul", a.data * b.data, (a, b), vjp)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Tensor":
        other = as_tensor(other)
        a, b = self, other

        def vjp(g):
            return (
                _unbroadcast(g / b.data, a.shape),
                _unbroadcast(-g * a.data / (b.data * b.data), b.shape),
            )

        return emit("div", a.data / b.data, (a, b), vjp)

    def __neg__(self) -> "Tensor":
        return emit("neg", -self.data, (self,), lambda g: (-g,))

    # Reductions and shape

    def sum(self, axis=None) -> "Tensor":
        shape = self.shape

        def vjp(g):
            if axis is not None:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, shape).copy(),)

        return emit("sum", self.data.sum(axis=axis), (self,), vjp)

    def mean(self, axis=None) -> "Tensor":
        count = self.data.size if axis is None else np.prod([self.shape[a] for a in _axes(axis)])
        return self.sum(axis=axis) * (1.0 / count)

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], tuple | list):
            shape = tuple(shape[0])
        original = self.shape
        return emit("reshape", self.data.reshape(shape), (self,), lambda g: (g.reshape(original),))

    # Elementwise functions

    def log(self) -> "Tensor":
        x = self.data
        return emit("log", np.log(x), (self,), lambda g: (g / x,))

    def abs(self) -> "Tensor":
        x = self.data
        return emit("abs", np.abs(x), (self,), lambda g: (g * np.sign(x),))

    def clip(self, low: float, high: float) -> "Tensor":
        x = self.data
        inside = (x >= low) & (x <= high)
        return emit("clip", np.clip(x, low, high), (self,), lambda g: (g * inside,))


def as_tensor(value) -> Tensor:
    """Wrap numbers and arrays as constant tensors; tensors pass through."""
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def _axes(axis) -> tuple[int, ...]:
    return axis if isinstance(axis, tuple) else (axis,)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def emit(op: str, data: np.ndarray, inputs: Sequence[Tensor], vjp: VJP) -> Tensor:
    """Create an op result and record it on the active graph when gradients are needed."""
    requires_grad = any(t.requires_grad for t in inputs)
    out = Tensor._result(data, requires_grad)
    graph = current_graph()
    if requires_grad and graph is not None:
        graph.record(op, tuple(inputs), out, vjp)
    return out


@dataclass
class Node:
    """One recorded operation: its kind, inputs and the saved backward closure."""

    op: str
    inputs: tuple[Tensor, ...]
    input_ids: tuple[int | None, ...]
    output: Tensor
    vjp: VJP


class Graph:
    """Append-only tape of operations, used as a context manager."""

    def __init__(self):
        self.nodes: list[Node] = []
        self.outputs: list[int] = []

    def __enter__(self) -> "Graph":
        _graph_stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        _graph_stack().pop()

    def __len__(self) -> int:
        return len(self.nodes)

    def record(self, op: str, inputs: tuple[Tensor, ...], output: Tensor, vjp: VJP) -> int:
        input_ids = tuple(t._node if t._graph is self else None for t in inputs)
        index = len(self.nodes)
        self.nodes.append(Node(op, inputs, input_ids, output, vjp))
        output._graph = self
        output._node = index
        return index

    def trace(self) -> list[tuple[str, tuple[int, ...]]]:
        """Op kinds and output shapes in creation order."""
        return [(node.op, node.output.shape) for node in self.nodes]

    def backward(self, loss: Tensor) -> None:
        """
        Accumulate d(loss)/d(leaf) into every leaf tensor with requires_grad.

        Gradients accumulate: calling backward twice without zeroing doubles them.

        Args:
            loss: Scalar tensor produced by an op recorded on this graph
        """
        if loss.size != 1:
            raise UsageError(
                f"backward() needs a scalar loss, got shape {loss.shape}",
                details={"shape": list(loss.shape)},
            )
        if loss._graph is not self or loss._node is None:
            raise UsageError("Loss tensor was not recorded on this graph")

        self.outputs.append(loss._node)
        cotangents: dict[int, np.ndarray] = {loss._node: np.ones_like(loss.data)}

        for index in range(loss._node, -1, -1):
            g = cotangents.pop(index, None)
            if g is None:
                continue
            node = self.nodes[index]
            for parent, parent_id, parent_grad in zip(node.inputs, node.input_ids, node.vjp(g)):
                if parent_grad is None or not parent.requires_grad:
                    continue
                if parent_id is not None:
                    if parent_id in cotangents:
                        cotangents[parent_id] = cotangents[parent_id] + parent_grad
                    else:
                        cotangents[parent_id] = parent_grad
                else:
                    if parent.grad is None:
                        parent.grad = np.zeros_like(parent.data)
                    parent.grad += parent_grad


def zero_grads(tensors: Sequence[Tensor]) -> None:
    """Reset the gradient accumulators of ``tensors`` to zero."""
    for tensor in tensors:
        tensor.zero_grad()
