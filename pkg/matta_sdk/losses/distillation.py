"""
Loss terms for co-training a Student with its Teaching Assistant.

    L_S  = mean_b  -sum_i y_i        * log p_S,i
    L_TA = mean_b  -sum_i y_i        * log p_TA,i
    L_D  = mean_b  -sum_i sg(p_TA,i) * log p_S,i
    L    = w_s * L_S + w_ta * L_TA + w_d(step) * L_D

sg() is a stop-gradient, so L_D never moves TA parameters.
"""

from dataclasses import dataclass
from typing import Dict, Optional, Union

import numpy as np

from ..diffcore import (
    Tensor,
    add,
    as_tensor,
    log_softmax_rows,
    mul,
    scale,
    softmax_rows,
    stop_gradient,
    sum_all,
)
from ..utils.errors import ContractError, DimensionError

LABEL_SUM_TOLERANCE = 1e-6
CURRICULUM_SHAPES = ("linear",)

Scalar = Union[Tensor, float]


@dataclass(frozen=True)
class LossWeights:
    w_s: float = 1.0
    w_ta: float = 1.0
    w_d: float = 1.0

    def __post_init__(self):
        values = (self.w_s, self.w_ta, self.w_d)
        if any(not np.isfinite(v) or v < 0 for v in values):
            raise ContractError(f"Loss weights must be finite and >= 0, got {values}")
        if all(v == 0 for v in values):
            raise ContractError("Loss weights must not all be zero")


@dataclass(frozen=True)
class Curriculum:
    """Hold the distillation weight at 0 until ramp_start, then ramp to its target by ramp_end."""

    ramp_start_step: int = 0
    ramp_end_step: int = 0
    shape: str = "linear"

    def __post_init__(self):
        if self.ramp_start_step < 0 or self.ramp_end_step < self.ramp_start_step:
            raise ContractError(
                f"Curriculum needs 0 <= ramp_start_step <= ramp_end_step, "
                f"got ({self.ramp_start_step}, {self.ramp_end_step})"
            )
        if self.shape not in CURRICULUM_SHAPES:
            raise ContractError(f"Unknown curriculum shape '{self.shape}'")


def curriculum_weight(step: int, curriculum: Optional[Curriculum], target: float) -> float:
    if target < 0:
        raise ContractError(f"Curriculum target must be >= 0, got {target}")
    if curriculum is None:
        return float(target)
    start, end = curriculum.ramp_start_step, curriculum.ramp_end_step
    if step < start:
        return 0.0
    if step >= end:
        return float(target)
    return float(target) * (step - start) / (end - start)


def _validate_labels(y: np.ndarray) -> None:
    if np.any(y < 0):
        row = int(np.argwhere(y < 0)[0][0])
        raise ContractError(f"Label row {row} has negative entries")
    sums = y.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > LABEL_SUM_TOLERANCE)
    if bad.size:
        raise ContractError(f"Label row {int(bad[0])} sums to {sums[bad[0]]!r}, expected 1")


def _batch_mean_cross_entropy(targets: Tensor, logits: Tensor) -> Tensor:
    return scale(sum_all(mul(targets, log_softmax_rows(logits))), -1.0 / logits.rows)


def soft_cross_entropy(logits: Tensor, y) -> Tensor:
    """Batch mean of -sum_i y_i log softmax(logits)_i; serves both L_S and L_TA."""
    y = as_tensor(y)
    if y.shape != logits.shape:
        raise DimensionError(f"soft_cross_entropy shape mismatch: logits {logits.shape}, labels {y.shape}")
    _validate_labels(y.data)
    return _batch_mean_cross_entropy(y, logits)


def distill_loss(logits_s: Tensor, logits_ta: Tensor) -> Tensor:
    """Cross-entropy of the Student against the TA's (stop-gradient) softmax."""
    if logits_s.shape != logits_ta.shape:
        raise DimensionError(f"distill_loss shape mismatch: {logits_s.shape} vs {logits_ta.shape}")
    targets = softmax_rows(stop_gradient(logits_ta))
    return _batch_mean_cross_entropy(targets, logits_s)


def _weighted_sum(factors, terms) -> Scalar:
    if not any(isinstance(t, Tensor) for t in terms):
        return sum(f * float(t) for f, t in zip(factors, terms))
    total = None
    for factor, term in zip(factors, terms):
        weighted = scale(term if isinstance(term, Tensor) else as_tensor([[term]]), factor)
        total = weighted if total is None else add(total, weighted)
    return total


def composite_loss(weights: LossWeights, l_s: Scalar, l_ta: Scalar, l_d: Scalar) -> Scalar:
    """w_s * l_s + w_ta * l_ta + w_d * l_d, as a tensor when any term is one."""
    return _weighted_sum((weights.w_s, weights.w_ta, weights.w_d), (l_s, l_ta, l_d))


@dataclass
class LossTerms:
    l_s: Tensor
    l_ta: Tensor
    l_d: Tensor
    total: Tensor
    w_d_effective: float

    def values(self) -> Dict[str, float]:
        return {
            "loss_s": self.l_s.item(),
            "loss_ta": self.l_ta.item(),
            "loss_d": self.l_d.item(),
            "loss_total": self.total.item(),
            "w_d_effective": self.w_d_effective,
        }


def matta_loss(
    logits_s: Tensor,
    logits_ta: Tensor,
    y,
    weights: LossWeights,
    curriculum: Optional[Curriculum],
    step: int,
) -> LossTerms:
    """All three terms plus the composite with the curriculum-modulated distillation weight."""
    l_s = soft_cross_entropy(logits_s, y)
    l_ta = soft_cross_entropy(logits_ta, y)
    l_d = distill_loss(logits_s, logits_ta)
    w_d = curriculum_weight(step, curriculum, weights.w_d)
    total = _weighted_sum((weights.w_s, weights.w_ta, w_d), (l_s, l_ta, l_d))
    return LossTerms(l_s=l_s, l_ta=l_ta, l_d=l_d, total=total, w_d_effective=w_d)
