"""
Dense 2-D tensors and the append-only tape used for reverse-mode gradients.

A Tensor wraps a read-only row-major float64 array. Tensors created through a
Graph carry a node id; every op that touches at least one recorded input is
appended to that graph together with a closure computing the input
gradients from the output gradient. Graphs are rebuilt for every training
step and never reused.
"""

from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..utils.errors import ContractError, DimensionError, NumericalError

VJP = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

_DEBUG = False


def set_debug(enabled: bool) -> None:
    """Check every op result for non-finite entries (slower)."""
    global _DEBUG
    _DEBUG = bool(enabled)


def is_debug() -> bool:
    return _DEBUG


def _check_finite(values: np.ndarray, what: str) -> None:
    if values.size and not np.all(np.isfinite(values)):
        raise NumericalError(f"Non-finite entries in {what}")


def _frozen(values: np.ndarray) -> np.ndarray:
    view = values.view()
    view.flags.writeable = False
    return view


class Tensor:
    """A rows x cols block of 64-bit floats, optionally recorded on a Graph."""

    __slots__ = ("data", "graph", "node_id")

    def __init__(self, data, graph: Optional["Graph"] = None, node_id: Optional[int] = None, check: bool = True):
        values = np.asarray(data, dtype=np.float64)
        if values.ndim != 2:
            raise DimensionError(f"Tensor data must be 2-D, got shape {values.shape}")
        if check:
            _check_finite(values, "tensor data")
        self.data = _frozen(values)
        self.graph = graph
        self.node_id = node_id

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.data.shape

    @property
    def is_recorded(self) -> bool:
        return self.graph is not None

    def numpy(self) -> np.ndarray:
        """Return a writable copy of the values."""
        return np.array(self.data, dtype=np.float64)

    def item(self) -> float:
        if self.shape != (1, 1):
            raise ContractError(f"item() needs a 1x1 tensor, got {self.rows}x{self.cols}")
        return float(self.data[0, 0])

    def __repr__(self) -> str:
        tag = f", node={self.node_id}" if self.graph is not None else ""
        return f"Tensor({self.rows}x{self.cols}{tag})"


def tensor(values) -> Tensor:
    """Create a constant tensor, rejecting NaN/Inf."""
    return Tensor(values)


def scalar(value: float) -> Tensor:
    return Tensor([[float(value)]])


def zeros(rows: int, cols: int) -> Tensor:
    return Tensor(np.zeros((rows, cols)), check=False)


def as_tensor(value) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


@dataclass
class Node:
    """One tape entry: op kind, input node ids (None for constants), value shape, gradient closure."""

    op: str
    inputs: Tuple[Optional[int], ...]
    shape: Tuple[int, int]
    vjp: Optional[VJP]


class Graph:
    """Append-only tape. Confined to one thread for its lifetime."""

    def __init__(self):
        self.nodes: List[Node] = []
        self.gradients: Dict[int, np.ndarray] = {}

    def __len__(self) -> int:
        return len(self.nodes)

    def leaf(self, values) -> Tensor:
        """Record a differentiable input (parameter or watched value); NaN/Inf is rejected."""
        source = values.data if isinstance(values, Tensor) else values
        array = np.asarray(source, dtype=np.float64)
        if array.ndim != 2:
            raise DimensionError(f"Tensor data must be 2-D, got shape {array.shape}")
        node_id = len(self.nodes)
        self.nodes.append(Node("leaf", (), array.shape, None))
        return Tensor(array, graph=self, node_id=node_id)

    def record(self, op: str, value: np.ndarray, inputs: Sequence[Tensor], vjp: VJP) -> Tensor:
        input_ids = tuple(t.node_id if t.graph is self else None for t in inputs)
        node_id = len(self.nodes)
        self.nodes.append(Node(op, input_ids, value.shape, vjp))
        return Tensor(value, graph=self, node_id=node_id, check=False)

    def grad(self, t: Tensor) -> np.ndarray:
        """Gradient of the last backward seed with respect to t (zeros when unreachable)."""
        if t.graph is not self:
            return np.zeros(t.shape)
        g = self.gradients.get(t.node_id)
        if g is None:
            return np.zeros(t.shape)
        return g


def graph_of(inputs: Iterable[Tensor]) -> Optional[Graph]:
    """Return the single graph the inputs are recorded on, or None for constants."""
    found: Optional[Graph] = None
    for t in inputs:
        if t.graph is None:
            continue
        if found is None:
            found = t.graph
        elif t.graph is not found:
            raise ContractError("Operands are recorded on different graphs")
    return found


def emit(op: str, value: np.ndarray, inputs: Sequence[Tensor], vjp: VJP) -> Tensor:
    """Wrap an op result, recording it when any input is on a graph."""
    if _DEBUG:
        _check_finite(value, f"result of {op}")
    graph = graph_of(inputs)
    if graph is None:
        return Tensor(value, check=False)
    return graph.record(op, value, inputs, vjp)


def backward(graph: Graph, seed: Tensor) -> Dict[int, np.ndarray]:
    """
    Reverse sweep from a 1x1 seed.

    Gradients accumulate additively across fan-out. Nodes the seed does not
    depend on get no entry (read them through ``Graph.grad`` as zeros).

    Args:
        graph: The tape the seed was recorded on.
        seed: A 1x1 tensor, usually the scalar loss.

    Returns:
        Gradients keyed by node id; also stored on ``graph.gradients``.
    """
    if seed.shape != (1, 1):
        raise ContractError(f"backward seed must be 1x1, got {seed.rows}x{seed.cols}")
    if seed.graph is not graph:
        raise ContractError("backward seed is not recorded on this graph")

    grads: Dict[int, np.ndarray] = {seed.node_id: np.ones((1, 1))}
    for node_id in range(seed.node_id, -1, -1):
        g = grads.get(node_id)
        if g is None:
            continue
        node = graph.nodes[node_id]
        if node.vjp is None:
            continue
        for input_id, input_grad in zip(node.inputs, node.vjp(g)):
            if input_id is None or input_grad is None:
                continue
            previous = grads.get(input_id)
            grads[input_id] = input_grad if previous is None else previous + input_grad

    if _DEBUG:
        for node_id, g in grads.items():
            _check_finite(g, f"gradient of node {node_id} ({graph.nodes[node_id].op})")
    graph.gradients = grads
    return grads


class ParameterScope:
    """
    Binds named parameter arrays to tensors for one forward pass.

    Each name maps to exactly one leaf, so a tensor read by both the Student
    and the TA path receives the sum of both gradient contributions.
    Without a graph the scope hands out constant tensors.
    """

    def __init__(self, graph: Optional[Graph] = None):
        self.graph = graph
        self._bound: Dict[str, Tensor] = {}

    def get(self, name: str, values: np.ndarray) -> Tensor:
        bound = self._bound.get(name)
        if bound is None:
            if self.graph is None:
                bound = Tensor(values)
            else:
                bound = self.graph.leaf(values)
            self._bound[name] = bound
        return bound

    def names(self) -> List[str]:
        return list(self._bound)

    def gradients(self) -> Dict[str, np.ndarray]:
        if self.graph is None:
            raise ContractError("gradients() needs a scope bound to a graph")
        return {name: self.graph.grad(t) for name, t in self._bound.items()}
