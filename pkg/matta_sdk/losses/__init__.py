"""Student, TA and distillation losses with the distillation ramp-up."""

from .distillation import (
    CURRICULUM_SHAPES,
    Curriculum,
    LossTerms,
    LossWeights,
    composite_loss,
    curriculum_weight,
    distill_loss,
    matta_loss,
    soft_cross_entropy,
)

__all__ = [
    "CURRICULUM_SHAPES",
    "Curriculum",
    "LossTerms",
    "LossWeights",
    "composite_loss",
    "curriculum_weight",
    "distill_loss",
    "matta_loss",
    "soft_cross_entropy",
]
