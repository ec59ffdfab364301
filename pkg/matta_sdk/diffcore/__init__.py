"""Dense 64-bit tensor math with reverse-mode gradients and stop-gradient."""

from .ops import (
    ACTIVATIONS,
    activation,
    add,
    concat_cols,
    log_softmax_rows,
    matmul,
    mul,
    scale,
    softmax_rows,
    split_cols,
    stop_gradient,
    sum_all,
)
from .rng import STREAM_EVAL, STREAM_INIT, STREAM_TASK, STREAM_TRAIN, Rng
from .tensor import (
    Graph,
    Node,
    ParameterScope,
    Tensor,
    as_tensor,
    backward,
    is_debug,
    scalar,
    set_debug,
    tensor,
    zeros,
)

__all__ = [
    "ACTIVATIONS",
    "Graph",
    "Node",
    "ParameterScope",
    "Rng",
    "STREAM_EVAL",
    "STREAM_INIT",
    "STREAM_TASK",
    "STREAM_TRAIN",
    "Tensor",
    "activation",
    "add",
    "as_tensor",
    "backward",
    "concat_cols",
    "is_debug",
    "log_softmax_rows",
    "matmul",
    "mul",
    "scalar",
    "scale",
    "set_debug",
    "softmax_rows",
    "split_cols",
    "stop_gradient",
    "sum_all",
    "tensor",
    "zeros",
]
