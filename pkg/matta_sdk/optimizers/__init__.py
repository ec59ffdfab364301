"""First-order baselines and the Shampoo second-order optimizer."""

from .benchmark import DEFAULT_LR_GRID, QuadraticBowl, make_bowl, quadratic_bowl_steps, steps_to_tolerance
from .first_order import FIRST_ORDER_METHODS, FirstOrderState, first_order_step
from .model_optimizer import (
    GRANULARITIES,
    OPTIMIZER_METHODS,
    ModelOptimizer,
    OptimizerConfig,
    ParamGroup,
    build_optimizer,
)
from .shampoo import (
    ROOT_METHODS,
    BlockStats,
    ShampooState,
    block_stats,
    correlation_matrix,
    inv_pth_root,
    jacobi_eigh,
    preconditioner_report,
    refresh_roots,
    root_from_eigen,
    roots_due,
    shampoo_accumulate,
    shampoo_direction,
    shampoo_step,
    symmetric_eigh,
    warmup_steps,
)

__all__ = [
    "BlockStats",
    "DEFAULT_LR_GRID",
    "FIRST_ORDER_METHODS",
    "FirstOrderState",
    "GRANULARITIES",
    "ModelOptimizer",
    "OPTIMIZER_METHODS",
    "OptimizerConfig",
    "ParamGroup",
    "QuadraticBowl",
    "ROOT_METHODS",
    "ShampooState",
    "block_stats",
    "build_optimizer",
    "correlation_matrix",
    "first_order_step",
    "inv_pth_root",
    "jacobi_eigh",
    "make_bowl",
    "preconditioner_report",
    "quadratic_bowl_steps",
    "refresh_roots",
    "root_from_eigen",
    "roots_due",
    "shampoo_accumulate",
    "shampoo_direction",
    "shampoo_step",
    "steps_to_tolerance",
    "symmetric_eigh",
    "warmup_steps",
]
