"""Differentiable tensor operations."""

import math

import numpy as np

from ..utils.errors import BoundsError, ContractError, DimensionError
from .tensor import Tensor, emit

ACTIVATIONS = ("tanh", "gelu_tanh", "relu")

_GELU_C = math.sqrt(2.0 / math.pi)
_GELU_K = 0.044715


def _shape(t: Tensor) -> str:
    return f"{t.rows}x{t.cols}"


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """
    Matrix product a @ b.

    Args:
        a: Left operand, rows x k.
        b: Right operand, k x cols.

    Returns:
        The rows x cols product, recorded when either operand is on a graph.
    """
    if a.cols != b.rows:
        raise DimensionError(f"matmul shape mismatch: {_shape(a)} @ {_shape(b)}")
    av, bv = a.data, b.data
    value = av @ bv

    def vjp(g):
        return g @ bv.T, av.T @ g

    return emit("matmul", value, (a, b), vjp)


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise DimensionError(f"add shape mismatch: {_shape(a)} + {_shape(b)}")

    def vjp(g):
        return g, g

    return emit("add", a.data + b.data, (a, b), vjp)


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product of same-shape tensors."""
    if a.shape != b.shape:
        raise DimensionError(f"mul shape mismatch: {_shape(a)} * {_shape(b)}")
    av, bv = a.data, b.data

    def vjp(g):
        return g * bv, g * av

    return emit("mul", av * bv, (a, b), vjp)


def scale(x: Tensor, factor: float) -> Tensor:
    factor = float(factor)

    def vjp(g):
        return (g * factor,)

    return emit("scale", x.data * factor, (x,), vjp)


def sum_all(x: Tensor) -> Tensor:
    """Sum of every entry as a 1x1 tensor."""
    shape = x.shape

    def vjp(g):
        return (np.full(shape, g[0, 0]),)

    return emit("sum_all", np.array([[x.data.sum()]]), (x,), vjp)


def split_cols(x: Tensor, m: int):
    """
    Split into the first m columns and the remaining cols - m.

    Args:
        x: Tensor to split.
        m: Column index in [0, x.cols]; either side may come out empty.

    Returns:
        Tuple of (left, right) tensors.
    """
    if m < 0 or m > x.cols:
        raise BoundsError(f"split_cols index {m} outside [0, {x.cols}] for {_shape(x)}")
    rows, cols = x.shape
    left_value = np.ascontiguousarray(x.data[:, :m])
    right_value = np.ascontiguousarray(x.data[:, m:])

    def left_vjp(g):
        full = np.zeros((rows, cols))
        full[:, :m] = g
        return (full,)

    def right_vjp(g):
        full = np.zeros((rows, cols))
        full[:, m:] = g
        return (full,)

    return emit("split_left", left_value, (x,), left_vjp), emit("split_right", right_value, (x,), right_vjp)


def concat_cols(a: Tensor, b: Tensor) -> Tensor:
    """
    Join two blocks side by side; the inverse of split_cols.

    Args:
        a: Left block.
        b: Right block with the same number of rows (may have zero columns).

    Returns:
        A tensor with a.cols + b.cols columns.
    """
    if a.rows != b.rows:
        raise DimensionError(f"concat_cols row mismatch: {_shape(a)} | {_shape(b)}")
    n1 = a.cols

    def vjp(g):
        return np.ascontiguousarray(g[:, :n1]), np.ascontiguousarray(g[:, n1:])

    return emit("concat_cols", np.concatenate([a.data, b.data], axis=1), (a, b), vjp)


def activation(x: Tensor, kind: str) -> Tensor:
    """
    Elementwise nonlinearity.

    Args:
        x: Input tensor.
        kind: One of "tanh", "relu" or "gelu_tanh" (the tanh approximation of GELU).

    Returns:
        Tensor of the same shape.
    """
    xv = x.data
    if kind == "tanh":
        value = np.tanh(xv)

        def vjp(g):
            return (g * (1.0 - value * value),)

    elif kind == "relu":
        mask = xv > 0.0
        value = np.where(mask, xv, 0.0)

        def vjp(g):
            return (g * mask,)

    elif kind == "gelu_tanh":
        inner = _GELU_C * (xv + _GELU_K * xv ** 3)
        t = np.tanh(inner)
        value = 0.5 * xv * (1.0 + t)

        def vjp(g):
            d_inner = _GELU_C * (1.0 + 3.0 * _GELU_K * xv * xv)
            return (g * (0.5 * (1.0 + t) + 0.5 * xv * (1.0 - t * t) * d_inner),)

    else:
        raise ContractError(f"Unsupported activation '{kind}' (expected one of {', '.join(ACTIVATIONS)})")

    return emit(kind, value, (x,), vjp)


def _log_softmax_values(xv: np.ndarray) -> np.ndarray:
    shifted = xv - xv.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def log_softmax_rows(x: Tensor) -> Tensor:
    """
    Row-wise log-softmax, computed after subtracting each row's maximum.

    Args:
        x: Logits with at least one column.

    Returns:
        Log-probabilities; each row exponentiates to a distribution.
    """
    if x.cols < 1:
        raise ContractError("log_softmax_rows needs at least one column")
    value = _log_softmax_values(x.data)
    probs = np.exp(value)

    def vjp(g):
        return (g - probs * g.sum(axis=1, keepdims=True),)

    return emit("log_softmax_rows", value, (x,), vjp)


def softmax_rows(x: Tensor) -> Tensor:
    if x.cols < 1:
        raise ContractError("softmax_rows needs at least one column")
    probs = np.exp(_log_softmax_values(x.data))

    def vjp(g):
        return (probs * (g - (g * probs).sum(axis=1, keepdims=True)),)

    return emit("softmax_rows", probs, (x,), vjp)


def stop_gradient(x: Tensor) -> Tensor:
    """Identity forward; contributes nothing to x's ancestors on backward."""

    def vjp(g):
        return (None,)

    return emit("stop_gradient", x.data, (x,), vjp)
