"""
Mix'n'Match extraction of standalone sub-models from a co-trained MatTA model.

Every block is taken either narrow (the Student's W_S pair) or wide (the
assembled TA pair). TA-exclusive blocks may additionally be skipped, which the
residual identity makes well formed. Wide-narrow-wide takes the bottom
ceil(k/2) and top floor(k/2) blocks wide and the middle narrow.
"""

import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..diffcore import ACTIVATIONS, Tensor, activation, add, as_tensor, matmul
from ..matlayers import MatTAModel, ModelDims, alg2_ta_product
from ..utils.errors import BoundsError, ContractError, DimensionError

NARROW = "narrow"
WIDE = "wide"
WIDTHS = (NARROW, WIDE)

SKIP = "skip"
INCLUDE_WIDE = "include-wide"
INCLUDE_NARROW = "include-narrow"
EXCLUSIVE_CHOICES = (SKIP, INCLUDE_WIDE, INCLUDE_NARROW)

STUDENT_LABEL = "student"
TA_LABEL = "ta"
IO_SOURCES = ("student", "ta")

_WNW_LABEL = re.compile(r"^wnw-k(\d+)$")


@dataclass(frozen=True)
class ExtractConfig:
    width_choice: Tuple[str, ...]
    include_exclusive: Tuple[str, ...] = ()
    label: str = ""
    k: Optional[int] = None
    io_source: str = "student"

    def __post_init__(self):
        object.__setattr__(self, "width_choice", tuple(self.width_choice))
        object.__setattr__(self, "include_exclusive", tuple(self.include_exclusive))
        for choice in self.width_choice:
            if choice not in WIDTHS:
                raise ContractError(f"Width choice must be one of {WIDTHS}, got '{choice}'")
        for choice in self.include_exclusive:
            if choice not in EXCLUSIVE_CHOICES:
                raise ContractError(f"Exclusive-block choice must be one of {EXCLUSIVE_CHOICES}, got '{choice}'")
        if len(self.include_exclusive) > len(self.width_choice):
            raise ContractError("More exclusive-block choices than blocks")
        n_shared = len(self.width_choice) - len(self.include_exclusive)
        for offset, choice in enumerate(self.include_exclusive):
            width = self.width_choice[n_shared + offset]
            if choice == INCLUDE_WIDE and width != WIDE or choice == INCLUDE_NARROW and width != NARROW:
                raise ContractError(
                    f"Block {n_shared + offset}: width '{width}' disagrees with exclusive choice '{choice}'"
                )
        if self.io_source not in IO_SOURCES:
            raise ContractError(f"io_source must be one of {IO_SOURCES}, got '{self.io_source}'")

    @property
    def n_total(self) -> int:
        return len(self.width_choice)

    @property
    def n_extra(self) -> int:
        return len(self.include_exclusive)

    def block_plan(self) -> List[Optional[str]]:
        """Width per block, None where the block is skipped."""
        n_shared = self.n_total - self.n_extra
        plan: List[Optional[str]] = list(self.width_choice[:n_shared])
        for offset, choice in enumerate(self.include_exclusive):
            plan.append(None if choice == SKIP else self.width_choice[n_shared + offset])
        return plan


# ------------------------------------------------------------------ configs

def _exclusive_choices(widths: Sequence[str], n_extra: int) -> Tuple[str, ...]:
    tail = widths[len(widths) - n_extra:] if n_extra else ()
    return tuple(INCLUDE_WIDE if w == WIDE else INCLUDE_NARROW for w in tail)


def wide_narrow_wide_config(k: int, n_total: int, n_extra: int = 0) -> ExtractConfig:
    """
    Wide blocks at both ends of the stack and narrow blocks in the middle.

    Args:
        k: Number of wide blocks; ceil(k/2) go at the bottom, floor(k/2) at the top.
        n_total: Blocks in the co-trained model, TA-exclusive ones included.
        n_extra: How many of the top blocks are TA-exclusive. A narrow exclusive block is kept narrow.

    Returns:
        ExtractConfig labelled ``wnw-k<k>``.
    """
    if not 0 <= n_extra <= n_total:
        raise BoundsError(f"n_extra={n_extra} outside [0, {n_total}]")
    if not 0 <= k <= n_total:
        raise BoundsError(f"k={k} outside [0, {n_total}]")
    bottom = (k + 1) // 2
    top = k // 2
    widths = tuple(WIDE if i < bottom or i >= n_total - top else NARROW for i in range(n_total))
    return ExtractConfig(
        width_choice=widths,
        include_exclusive=_exclusive_choices(widths, n_extra),
        label=f"wnw-k{k}",
        k=k,
    )


def student_config(n_total: int, n_extra: int = 0) -> ExtractConfig:
    return ExtractConfig(
        width_choice=(NARROW,) * n_total,
        include_exclusive=(SKIP,) * n_extra,
        label=STUDENT_LABEL,
    )


def ta_config(n_total: int, n_extra: int = 0) -> ExtractConfig:
    return ExtractConfig(
        width_choice=(WIDE,) * n_total,
        include_exclusive=(INCLUDE_WIDE,) * n_extra,
        label=TA_LABEL,
        k=n_total,
        io_source="ta",
    )


def enumerate_grid(n_total: int, ks: Sequence[int], n_extra: int = 0) -> List[ExtractConfig]:
    """Reserved "student" config, one wide-narrow-wide config per k, then the reserved "ta" config."""
    ks = [int(k) for k in ks]
    for k in ks:
        if not 0 <= k <= n_total:
            raise BoundsError(f"k={k} outside [0, {n_total}]")
    if len(set(ks)) != len(ks):
        raise ContractError(f"Duplicate k values in {ks}")
    if ks != sorted(ks):
        raise ContractError(f"k values must be sorted ascending, got {ks}")
    configs = [student_config(n_total, n_extra)]
    configs += [wide_narrow_wide_config(k, n_total, n_extra) for k in ks]
    configs.append(ta_config(n_total, n_extra))
    return configs


def config_for_label(label: str, n_total: int, n_extra: int = 0) -> ExtractConfig:
    if label == STUDENT_LABEL:
        return student_config(n_total, n_extra)
    if label == TA_LABEL:
        return ta_config(n_total, n_extra)
    match = _WNW_LABEL.match(label)
    if match:
        return wide_narrow_wide_config(int(match.group(1)), n_total, n_extra)
    raise ContractError(
        f"Unknown extraction label '{label}'",
        fix_instructions=["Use 'student', 'ta' or 'wnw-k<K>' (e.g. wnw-k4)"],
    )


# --------------------------------------------------------------- standalone

class PlainDense:
    """
    A dense layer with no nesting metadata beyond where its weight was cut.

    When the weight is wider than its narrow corner the product is computed
    block-wise in the same order as the co-trained TA path, so the extracted
    output matches it bitwise.
    """

    def __init__(self, weight: np.ndarray, row_split: Optional[int] = None, col_split: Optional[int] = None):
        self.weight = np.ascontiguousarray(weight, dtype=np.float64)
        rows, cols = self.weight.shape
        self.row_split = rows if row_split is None else int(row_split)
        self.col_split = cols if col_split is None else int(col_split)
        if not (0 < self.row_split <= rows and 0 < self.col_split <= cols):
            raise BoundsError(f"Split ({self.row_split}, {self.col_split}) outside weight shape {self.weight.shape}")
        self.is_nested = (self.row_split, self.col_split) != (rows, cols)
        if self.is_nested:
            self._blocks = tuple(
                Tensor(np.ascontiguousarray(block))
                for block in (
                    self.weight[: self.row_split, : self.col_split],
                    self.weight[self.row_split:, : self.col_split],
                    self.weight[:, self.col_split:],
                )
            )
        else:
            self._full = Tensor(self.weight)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.weight.shape

    def forward(self, x: Tensor) -> Tensor:
        if x.cols != self.weight.shape[0]:
            raise DimensionError(f"PlainDense input has {x.cols} columns, weight has {self.weight.shape[0]} rows")
        if not self.is_nested:
            return matmul(x, self._full)
        top, extra, right = self._blocks
        return alg2_ta_product(x, top, extra, right, self.row_split)


@dataclass(eq=False)
class StandaloneBlock:
    up: PlainDense
    down: PlainDense
    activation: str = "gelu_tanh"

    def forward(self, x: Tensor) -> Tensor:
        return add(x, self.down.forward(activation(self.up.forward(x), self.activation)))


@dataclass(eq=False)
class StandaloneModel:
    encoder: np.ndarray
    readout: np.ndarray
    blocks: List[StandaloneBlock] = field(default_factory=list)
    label: str = ""

    def forward(self, x) -> Tensor:
        x = as_tensor(x)
        if x.cols != self.encoder.shape[0]:
            raise DimensionError(f"Model input has {x.cols} columns, expected {self.encoder.shape[0]}")
        h = matmul(x, Tensor(self.encoder))
        for block in self.blocks:
            h = block.forward(h)
        return matmul(h, Tensor(self.readout))

    def named_tensors(self) -> Dict[str, np.ndarray]:
        found = {"encoder": self.encoder}
        for index, block in enumerate(self.blocks):
            found[f"blocks.{index}.up"] = block.up.weight
            found[f"blocks.{index}.down"] = block.down.weight
        found["readout"] = self.readout
        return found

    def param_count(self, include_embedding: bool = True) -> int:
        total = sum(v.size for k, v in self.named_tensors().items() if k.startswith("blocks."))
        if include_embedding:
            total += self.encoder.size + self.readout.size
        return int(total)

    def header(self) -> Dict[str, object]:
        """Layout metadata stored next to the tensors of an extracted checkpoint."""
        return {
            "label": self.label,
            "activation": self.blocks[0].activation if self.blocks else "gelu_tanh",
            "splits": [
                [b.up.row_split, b.up.col_split, b.down.row_split, b.down.col_split] for b in self.blocks
            ],
        }


def standalone_from_tensors(header: Dict[str, object], tensors: Dict[str, np.ndarray]) -> StandaloneModel:
    kind = header.get("activation", "gelu_tanh")
    if kind not in ACTIVATIONS:
        raise ContractError(f"Unsupported activation '{kind}'")
    blocks = []
    for index, split in enumerate(header.get("splits", [])):
        up_rows, up_cols, down_rows, down_cols = split
        blocks.append(
            StandaloneBlock(
                up=PlainDense(tensors[f"blocks.{index}.up"], up_rows, up_cols),
                down=PlainDense(tensors[f"blocks.{index}.down"], down_rows, down_cols),
                activation=kind,
            )
        )
    return StandaloneModel(
        encoder=tensors["encoder"],
        readout=tensors["readout"],
        blocks=blocks,
        label=str(header.get("label", "")),
    )


def materialize(model: MatTAModel, cfg: ExtractConfig) -> StandaloneModel:
    """
    Copy the tensors a config selects into a plain residual stack.

    Args:
        model: The co-trained model; left untouched.
        cfg: Width choice per block.

    Returns:
        StandaloneModel whose wide blocks reproduce the TA path's op order.
    """
    dims = model.dims
    if cfg.n_total != dims.n_total or cfg.n_extra != dims.n_extra:
        raise ContractError(
            f"Config '{cfg.label}' describes {cfg.n_total} blocks ({cfg.n_extra} exclusive), "
            f"model has {dims.n_total} ({dims.n_extra} exclusive)"
        )
    use_ta_io = cfg.io_source == "ta" and model.sharing == "fully-unshared"
    encoder = (model.encoder_ta if use_ta_io else model.encoder).copy()
    readout = (model.readout_ta if use_ta_io else model.readout).copy()

    blocks = []
    for block, width in zip(model.blocks, cfg.block_plan()):
        if width is None:
            continue
        if width == NARROW:
            up = PlainDense(block.up.w_s.copy())
            down = PlainDense(block.down.w_s.copy())
        else:
            up = PlainDense(block.up.assembled_ta_weight(), block.up.m_s, block.up.n_s)
            down = PlainDense(block.down.assembled_ta_weight(), block.down.m_s, block.down.n_s)
        blocks.append(StandaloneBlock(up=up, down=down, activation=block.activation))
    return StandaloneModel(encoder=encoder, readout=readout, blocks=blocks, label=cfg.label)


def extracted_param_count(cfg: ExtractConfig, dims: ModelDims, include_embedding: bool = True) -> int:
    """
    Closed-form parameter count of the sub-model a config selects.

    Args:
        cfg: The extraction config.
        dims: Dims of the model it will be applied to.
        include_embedding: Count the encoder and readout too.

    Returns:
        Number of float entries.
    """
    if cfg.n_total != dims.n_total:
        raise ContractError(f"Config has {cfg.n_total} blocks, dims describe {dims.n_total}")
    total = 0
    for width in cfg.block_plan():
        if width is None:
            continue
        hidden = dims.h_s if width == NARROW else dims.h_ta
        total += 2 * dims.d * hidden
    if include_embedding:
        total += dims.d_in * dims.d + dims.d * dims.n_classes
    return total
