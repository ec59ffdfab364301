"""Mix'n'Match sub-model extraction."""

from .mix_n_match import (
    EXCLUSIVE_CHOICES,
    INCLUDE_NARROW,
    INCLUDE_WIDE,
    NARROW,
    SKIP,
    STUDENT_LABEL,
    TA_LABEL,
    WIDE,
    ExtractConfig,
    PlainDense,
    StandaloneBlock,
    StandaloneModel,
    config_for_label,
    enumerate_grid,
    extracted_param_count,
    materialize,
    standalone_from_tensors,
    student_config,
    ta_config,
    wide_narrow_wide_config,
)

__all__ = [
    "EXCLUSIVE_CHOICES",
    "INCLUDE_NARROW",
    "INCLUDE_WIDE",
    "NARROW",
    "SKIP",
    "STUDENT_LABEL",
    "TA_LABEL",
    "WIDE",
    "ExtractConfig",
    "PlainDense",
    "StandaloneBlock",
    "StandaloneModel",
    "config_for_label",
    "enumerate_grid",
    "extracted_param_count",
    "materialize",
    "standalone_from_tensors",
    "student_config",
    "ta_config",
    "wide_narrow_wide_config",
]
