"""Synthetic Teacher task, streaming batches and evaluation metrics."""

from .metrics import EvalMetrics, auroc, evaluate
from .synthetic import (
    LABEL_MODES,
    SyntheticTask,
    TaskConfig,
    sample_batch,
    sample_inputs,
    task_from_config,
    task_new,
    teacher_logits,
    teacher_probabilities,
)

__all__ = [
    "LABEL_MODES",
    "EvalMetrics",
    "SyntheticTask",
    "TaskConfig",
    "auroc",
    "evaluate",
    "sample_batch",
    "sample_inputs",
    "task_from_config",
    "task_new",
    "teacher_logits",
    "teacher_probabilities",
]
