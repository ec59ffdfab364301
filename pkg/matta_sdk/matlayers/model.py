"""
MatTA model: shared encoder, a stack of M-nested residual FFN blocks and a
shared readout. The last ``n_extra`` blocks are exclusive to the TA; the
Student passes over them through the residual identity.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..diffcore import ACTIVATIONS, ParameterScope, Rng, Tensor, activation, add, as_tensor, matmul
from ..utils.errors import ContractError, DimensionError
from .nested_dense import NestedDense, nested_dense_new, nested_dense_student, nested_dense_ta

SHARING_MODES = ("shared", "unshared-blocks", "fully-unshared")
DENSE_NAMES = ("up", "down")


@dataclass(frozen=True)
class ModelDims:
    d_in: int
    d: int
    h_s: int
    h_ta: int
    n_shared: int
    n_extra: int
    n_classes: int

    def __post_init__(self):
        for name in ("d_in", "d", "h_s", "h_ta", "n_classes"):
            if getattr(self, name) < 1:
                raise ContractError(f"ModelDims.{name} must be >= 1, got {getattr(self, name)}")
        for name in ("n_shared", "n_extra"):
            if getattr(self, name) < 0:
                raise ContractError(f"ModelDims.{name} must be >= 0, got {getattr(self, name)}")
        if self.h_s > self.h_ta:
            raise ContractError(f"h_s ({self.h_s}) must not exceed h_ta ({self.h_ta})")

    @property
    def n_total(self) -> int:
        return self.n_shared + self.n_extra


@dataclass(eq=False)
class NestedBlock:
    up: NestedDense
    down: NestedDense
    activation: str = "gelu_tanh"
    ta_exclusive: bool = False

    def __post_init__(self):
        up, down = self.up, self.down
        d = up.m_s
        if not (up.m_s == up.m_ta == d and down.n_s == down.n_ta == d):
            raise DimensionError("NestedBlock needs up.m_s == up.m_ta == down.n_s == down.n_ta")
        if not (up.n_s == down.m_s and up.n_ta == down.m_ta):
            raise DimensionError("NestedBlock hidden widths of up and down must agree")
        if self.activation not in ACTIVATIONS:
            raise ContractError(f"Unsupported activation '{self.activation}'")


@dataclass(eq=False)
class MatTAModel:
    dims: ModelDims
    sharing: str
    encoder: np.ndarray
    readout: np.ndarray
    blocks: List[NestedBlock] = field(default_factory=list)
    encoder_ta: Optional[np.ndarray] = None
    readout_ta: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.sharing not in SHARING_MODES:
            raise ContractError(f"Unknown sharing mode '{self.sharing}' (expected one of {', '.join(SHARING_MODES)})")
        if len(self.blocks) != self.dims.n_total:
            raise DimensionError(f"Expected {self.dims.n_total} blocks, got {len(self.blocks)}")
        has_io_copies = self.encoder_ta is not None and self.readout_ta is not None
        if has_io_copies != (self.sharing == "fully-unshared"):
            raise ContractError("encoder_ta/readout_ta are present exactly when sharing is fully-unshared")

    # ----------------------------------------------------------------- names

    def named_tensors(self) -> Dict[str, np.ndarray]:
        """Every model tensor under its canonical name, in a stable order."""
        found: Dict[str, np.ndarray] = {"encoder": self.encoder}
        if self.encoder_ta is not None:
            found["encoder_ta"] = self.encoder_ta
        for index, block in enumerate(self.blocks):
            for dense_name in DENSE_NAMES:
                layer = getattr(block, dense_name)
                for local, value in layer.tensors().items():
                    found[f"blocks.{index}.{dense_name}.{local}"] = value
        found["readout"] = self.readout
        if self.readout_ta is not None:
            found["readout_ta"] = self.readout_ta
        return found

    def student_names(self) -> List[str]:
        """Student tensors: encoder, readout and the w_s pair of every non-exclusive block."""
        names = ["encoder"]
        for index, block in enumerate(self.blocks):
            if not block.ta_exclusive:
                names += [f"blocks.{index}.up.w_s", f"blocks.{index}.down.w_s"]
        names.append("readout")
        return names

    def ta_path_names(self) -> List[str]:
        """Tensors the TA forward path reads."""
        names = [_io_name(self, "encoder", "ta")]
        for index, block in enumerate(self.blocks):
            for dense_name in DENSE_NAMES:
                layer = getattr(block, dense_name)
                prefix = f"blocks.{index}.{dense_name}"
                names += [f"{prefix}.{layer.ta_weight_name}", f"{prefix}.w_ta1", f"{prefix}.w_ta2"]
        names.append(_io_name(self, "readout", "ta"))
        return names

    def get_tensor(self, name: str) -> np.ndarray:
        try:
            return self.named_tensors()[name]
        except KeyError:
            raise KeyError(f"Unknown model tensor '{name}'") from None

    def set_tensor(self, name: str, value: np.ndarray) -> None:
        current = self.get_tensor(name)
        value = np.asarray(value, dtype=np.float64)
        if value.shape != current.shape:
            raise DimensionError(f"{name}: expected shape {current.shape}, got {value.shape}")
        parts = name.split(".")
        if len(parts) == 1:
            setattr(self, name, value)
            return
        _, index, dense_name, local = parts
        setattr(getattr(self.blocks[int(index)], dense_name), local, value)

    def copy(self) -> "MatTAModel":
        clone = model_like(self)
        for name, value in self.named_tensors().items():
            clone.set_tensor(name, value.copy())
        return clone


def model_new(
    dims: ModelDims,
    sharing: str = "shared",
    rng: Optional[Rng] = None,
    activation_kind: str = "gelu_tanh",
) -> MatTAModel:
    """
    Build a freshly initialized model.

    TA-exclusive blocks are always built shared: their narrow weights are
    already TA-only, so a second copy would never be read.

    Args:
        dims: Widths and depths of both paths.
        sharing: One of "shared", "unshared-blocks" or "fully-unshared".
        rng: Initialization stream; Rng(0) when omitted.
        activation_kind: Nonlinearity used inside every block.

    Returns:
        The new MatTAModel.
    """
    if sharing not in SHARING_MODES:
        raise ContractError(f"Unknown sharing mode '{sharing}' (expected one of {', '.join(SHARING_MODES)})")
    rng = rng or Rng(0)
    encoder = rng.normal(dims.d_in, dims.d, std=1.0 / np.sqrt(dims.d_in))
    blocks = []
    for index in range(dims.n_total):
        exclusive = index >= dims.n_shared
        block_shared = exclusive or sharing == "shared"
        up = nested_dense_new(dims.d, dims.d, dims.h_s, dims.h_ta, block_shared, rng)
        down = nested_dense_new(dims.h_s, dims.h_ta, dims.d, dims.d, block_shared, rng)
        blocks.append(NestedBlock(up=up, down=down, activation=activation_kind, ta_exclusive=exclusive))
    readout = rng.normal(dims.d, dims.n_classes, std=1.0 / np.sqrt(dims.d))
    fully_unshared = sharing == "fully-unshared"
    return MatTAModel(
        dims=dims,
        sharing=sharing,
        encoder=encoder,
        readout=readout,
        blocks=blocks,
        encoder_ta=encoder.copy() if fully_unshared else None,
        readout_ta=readout.copy() if fully_unshared else None,
    )


def model_like(model: MatTAModel) -> MatTAModel:
    """A zero-initialized model with the same dims, sharing and activation."""
    dims = model.dims
    kind = model.blocks[0].activation if model.blocks else "gelu_tanh"
    clone = model_new(dims, model.sharing, Rng(0), kind)
    for name, value in clone.named_tensors().items():
        clone.set_tensor(name, np.zeros_like(value))
    return clone


# ------------------------------------------------------------------- forward

def _block_student(block: NestedBlock, x_s: Tensor, scope: ParameterScope, prefix: str) -> Tensor:
    if block.ta_exclusive:
        return x_s
    hidden = activation(nested_dense_student(block.up, x_s, scope, f"{prefix}.up"), block.activation)
    return add(x_s, nested_dense_student(block.down, hidden, scope, f"{prefix}.down"))


def _block_ta(block: NestedBlock, x_ta: Tensor, scope: ParameterScope, prefix: str) -> Tensor:
    hidden = activation(nested_dense_ta(block.up, x_ta, scope, f"{prefix}.up"), block.activation)
    return add(x_ta, nested_dense_ta(block.down, hidden, scope, f"{prefix}.down"))


def nested_block_forward(
    block: NestedBlock,
    x_s: Tensor,
    x_ta: Tensor,
    scope: Optional[ParameterScope] = None,
    prefix: str = "block",
) -> Tuple[Tensor, Tensor]:
    """y = x + down(act(up(x))) on each path; a TA-exclusive block leaves x_s untouched."""
    scope = scope or ParameterScope()
    for name, t in (("x_s", x_s), ("x_ta", x_ta)):
        if t.cols != block.up.m_s:
            raise DimensionError(f"{prefix}: {name} has {t.cols} columns, block expects {block.up.m_s}")
    return _block_student(block, x_s, scope, prefix), _block_ta(block, x_ta, scope, prefix)


def _check_input(model: MatTAModel, x: Tensor) -> None:
    if x.cols != model.dims.d_in:
        raise DimensionError(f"Model input has {x.cols} columns, expected d_in={model.dims.d_in}")


def _io_name(model: MatTAModel, base: str, path: str) -> str:
    """encoder/readout name a path reads; the TA has its own copies only when fully unshared."""
    if path == "ta" and model.sharing == "fully-unshared":
        return f"{base}_ta"
    return base


def _io_tensor(model: MatTAModel, base: str, path: str, scope: ParameterScope) -> Tensor:
    name = _io_name(model, base, path)
    return scope.get(name, getattr(model, name))


def model_forward(model: MatTAModel, x, scope: Optional[ParameterScope] = None) -> Tuple[Tensor, Tensor]:
    """
    Run the Student and TA paths in one pass.

    Args:
        model: The co-trained model.
        x: Batch of shape B x d_in (array or Tensor).
        scope: Pass a graph-backed scope to record for backward.

    Returns:
        Tuple of (logits_S, logits_TA), each B x n_classes.
    """
    scope = scope or ParameterScope()
    x = as_tensor(x)
    _check_input(model, x)
    x_s = matmul(x, _io_tensor(model, "encoder", "student", scope))
    if model.sharing == "fully-unshared":
        x_ta = matmul(x, _io_tensor(model, "encoder", "ta", scope))
    else:
        x_ta = x_s
    for index, block in enumerate(model.blocks):
        x_s, x_ta = nested_block_forward(block, x_s, x_ta, scope, f"blocks.{index}")
    logits_s = matmul(x_s, _io_tensor(model, "readout", "student", scope))
    logits_ta = matmul(x_ta, _io_tensor(model, "readout", "ta", scope))
    return logits_s, logits_ta


def path_forward(model: MatTAModel, x, path: str, scope: Optional[ParameterScope] = None) -> Tensor:
    """Logits of a single path ("student" or "ta"), same op order as model_forward."""
    if path not in ("student", "ta"):
        raise ContractError(f"Unknown path '{path}' (expected 'student' or 'ta')")
    scope = scope or ParameterScope()
    x = as_tensor(x)
    _check_input(model, x)
    block_fn = _block_student if path == "student" else _block_ta
    h = matmul(x, _io_tensor(model, "encoder", path, scope))
    for index, block in enumerate(model.blocks):
        h = block_fn(block, h, scope, f"blocks.{index}")
    return matmul(h, _io_tensor(model, "readout", path, scope))


def param_count(model: MatTAModel, which: str) -> int:
    """
    Count trainable entries.

    Args:
        model: The model to count.
        which: "student" for the Student tensors, "ta" for every tensor.

    Returns:
        Number of float entries.
    """
    tensors = model.named_tensors()
    if which == "student":
        names = model.student_names()
    elif which == "ta":
        names = list(tensors)
    else:
        raise ContractError(f"param_count expects 'student' or 'ta', got '{which}'")
    return int(sum(tensors[name].size for name in names))
