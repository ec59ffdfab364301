"""
M-nested Dense layer.

The Student weight block W_S (m_s x n_s) sits in the top-left corner of the
TA weight W_TA (m_ta x n_ta). The rest of W_TA is stored as two blocks:
W_TA1 under W_S ((m_ta - m_s) x n_s) and W_TA2 to the right of both
(m_ta x (n_ta - n_s)). Either extra block may have zero rows or columns.

    W_TA = [[ W_S  | W_TA2 ],
            [ W_TA1|       ]]
"""

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from ..diffcore import ParameterScope, Rng, Tensor, add, concat_cols, matmul, split_cols
from ..utils.errors import ContractError, DimensionError


@dataclass(eq=False)
class NestedDense:
    m_s: int
    m_ta: int
    n_s: int
    n_ta: int
    w_s: np.ndarray
    w_ta1: np.ndarray
    w_ta2: np.ndarray
    shared: bool = True
    w_s_ta_copy: Optional[np.ndarray] = None

    def __post_init__(self):
        expected = {
            "w_s": (self.m_s, self.n_s),
            "w_ta1": (self.m_ta - self.m_s, self.n_s),
            "w_ta2": (self.m_ta, self.n_ta - self.n_s),
        }
        if not self.shared:
            expected["w_s_ta_copy"] = (self.m_s, self.n_s)
        elif self.w_s_ta_copy is not None:
            raise ContractError("w_s_ta_copy is only present when shared is false")
        for name, shape in expected.items():
            value = getattr(self, name)
            if value is None or value.shape != shape:
                got = None if value is None else value.shape
                raise DimensionError(f"NestedDense.{name} must have shape {shape}, got {got}")

    @property
    def ta_weight_name(self) -> str:
        """Name of the Student-shaped block the TA path reads."""
        return "w_s" if self.shared else "w_s_ta_copy"

    def tensors(self) -> Dict[str, np.ndarray]:
        found = {"w_s": self.w_s, "w_ta1": self.w_ta1, "w_ta2": self.w_ta2}
        if not self.shared:
            found["w_s_ta_copy"] = self.w_s_ta_copy
        return found

    def assembled_ta_weight(self) -> np.ndarray:
        """The full TA weight with the Student block in its top-left corner."""
        top_left = self.w_s if self.shared else self.w_s_ta_copy
        left = np.concatenate([top_left, self.w_ta1], axis=0)
        return np.concatenate([left, self.w_ta2], axis=1)


def _init_block(rng: Rng, rows: int, cols: int, fan_in: int) -> np.ndarray:
    if rows == 0 or cols == 0:
        return np.zeros((rows, cols))
    return rng.normal(rows, cols, std=1.0 / np.sqrt(fan_in))


def nested_dense_new(m_s: int, m_ta: int, n_s: int, n_ta: int, shared: bool, rng: Rng) -> NestedDense:
    """
    Create an M-nested Dense layer.

    W_S, W_TA1 and W_TA2 are drawn in that order from normal(0, 1/sqrt(fan_in)).

    Args:
        m_s: Student input width.
        m_ta: TA input width, at least m_s.
        n_s: Student output width.
        n_ta: TA output width, at least n_s.
        shared: When False the TA reads its own copy of W_S.
        rng: Source of the initial weights.

    Returns:
        The new NestedDense.
    """
    if not (1 <= m_s <= m_ta and 1 <= n_s <= n_ta):
        raise ContractError(
            f"Nested dims need 1 <= m_s <= m_ta and 1 <= n_s <= n_ta, "
            f"got m_s={m_s}, m_ta={m_ta}, n_s={n_s}, n_ta={n_ta}"
        )
    w_s = _init_block(rng, m_s, n_s, m_s)
    w_ta1 = _init_block(rng, m_ta - m_s, n_s, m_ta - m_s)
    w_ta2 = _init_block(rng, m_ta, n_ta - n_s, m_ta)
    return NestedDense(
        m_s=m_s,
        m_ta=m_ta,
        n_s=n_s,
        n_ta=n_ta,
        w_s=w_s,
        w_ta1=w_ta1,
        w_ta2=w_ta2,
        shared=shared,
        w_s_ta_copy=None if shared else w_s.copy(),
    )


def alg2_ta_product(i_ta: Tensor, w_top: Tensor, w_extra: Tensor, w_right: Tensor, m_s: int) -> Tensor:
    """
    TA output of an M-nested Dense layer.

    [I0, I_extra] = split(I_TA, m_s); O1 = I0 W_top + I_extra W_extra;
    O2 = I_TA W_right; O_TA = [O1 | O2].
    """
    i0, i_extra = split_cols(i_ta, m_s)
    o1 = add(matmul(i0, w_top), matmul(i_extra, w_extra))
    o2 = matmul(i_ta, w_right)
    return concat_cols(o1, o2)


def nested_dense_student(layer: NestedDense, i_s: Tensor, scope: ParameterScope, prefix: str) -> Tensor:
    if i_s.cols != layer.m_s:
        raise DimensionError(f"{prefix}: Student input has {i_s.cols} columns, layer expects {layer.m_s}")
    return matmul(i_s, scope.get(f"{prefix}.w_s", layer.w_s))


def nested_dense_ta(layer: NestedDense, i_ta: Tensor, scope: ParameterScope, prefix: str) -> Tensor:
    if i_ta.cols != layer.m_ta:
        raise DimensionError(f"{prefix}: TA input has {i_ta.cols} columns, layer expects {layer.m_ta}")
    top_name = layer.ta_weight_name
    return alg2_ta_product(
        i_ta,
        scope.get(f"{prefix}.{top_name}", getattr(layer, top_name)),
        scope.get(f"{prefix}.w_ta1", layer.w_ta1),
        scope.get(f"{prefix}.w_ta2", layer.w_ta2),
        layer.m_s,
    )


def nested_dense_forward(
    layer: NestedDense,
    i_s: Tensor,
    i_ta: Tensor,
    scope: Optional[ParameterScope] = None,
    prefix: str = "dense",
) -> Tuple[Tensor, Tensor]:
    """
    Run both paths of one M-nested Dense layer.

    Args:
        layer: The layer.
        i_s: Student input, B x m_s.
        i_ta: TA input, B x m_ta. For a single-input layer pass the same tensor twice.
        scope: Binds the layer weights to graph leaves; constants when omitted.
        prefix: Name prefix for the weights in ``scope``.

    Returns:
        Tuple of (O_S, O_TA).
    """
    scope = scope or ParameterScope()
    return (
        nested_dense_student(layer, i_s, scope, prefix),
        nested_dense_ta(layer, i_ta, scope, prefix),
    )
