"""M-nested layers and the Student-inside-TA model."""

from .model import (
    DENSE_NAMES,
    SHARING_MODES,
    MatTAModel,
    ModelDims,
    NestedBlock,
    model_forward,
    model_like,
    model_new,
    nested_block_forward,
    param_count,
    path_forward,
)
from .nested_dense import (
    NestedDense,
    alg2_ta_product,
    nested_dense_forward,
    nested_dense_new,
    nested_dense_student,
    nested_dense_ta,
)

__all__ = [
    "DENSE_NAMES",
    "SHARING_MODES",
    "MatTAModel",
    "ModelDims",
    "NestedBlock",
    "NestedDense",
    "alg2_ta_product",
    "model_forward",
    "model_like",
    "model_new",
    "nested_block_forward",
    "nested_dense_forward",
    "nested_dense_new",
    "nested_dense_student",
    "nested_dense_ta",
    "param_count",
    "path_forward",
]
