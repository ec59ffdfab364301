"""Held-out evaluation: cross-entropy, accuracy, AUROC and AucLoss."""

from dataclasses import dataclass
from typing import Callable, Dict, Optional

import numpy as np

from ..diffcore import STREAM_EVAL, Rng, Tensor, log_softmax_rows
from ..utils.errors import ContractError, DimensionError, UndefinedMetricError
from .synthetic import SyntheticTask, sample_inputs, teacher_probabilities


@dataclass(frozen=True)
class EvalMetrics:
    cross_entropy: float
    accuracy: float
    auroc: Optional[float] = None

    @property
    def aucloss(self) -> Optional[float]:
        return None if self.auroc is None else 1.0 - self.auroc

    def as_row(self) -> Dict[str, Optional[float]]:
        return {
            "cross_entropy": self.cross_entropy,
            "accuracy": self.accuracy,
            "auroc": self.auroc,
            "aucloss": self.aucloss,
        }


def auroc(scores, labels) -> float:
    """
    Probability that a positive outscores a negative, ties counting one half.

    Computed from average ranks (Mann-Whitney U).
    """
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    if scores.shape != labels.shape:
        raise DimensionError(f"auroc got {scores.size} scores and {labels.size} labels")
    if not np.all((labels == 0) | (labels == 1)):
        raise ContractError("auroc labels must be 0 or 1")
    positive = labels == 1
    n_pos = int(positive.sum())
    n_neg = int(labels.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUROC is undefined when only one class is present")

    _, inverse, counts = np.unique(scores, return_inverse=True, return_counts=True)
    ends = np.cumsum(counts)
    average_rank = ends - (counts - 1) / 2.0
    ranks = average_rank[inverse.ravel()]
    u = ranks[positive].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def _as_logits(value) -> np.ndarray:
    if isinstance(value, Tensor):
        return value.numpy()
    return np.asarray(value, dtype=np.float64)


def evaluate(
    forward_fn: Callable[[np.ndarray], object],
    task: SyntheticTask,
    n_eval: int,
    seed: int,
    blank_undefined_auroc: bool = False,
) -> EvalMetrics:
    """
    Score ``forward_fn`` (inputs -> logits) on a held-out set drawn from the
    evaluation stream of ``seed``. Labels are the teacher's soft probabilities;
    accuracy and AUROC use the teacher's argmax class.

    Args:
        forward_fn: Maps an n_eval x d_in input array to n_eval x C logits
        task: Task supplying inputs and teacher labels
        n_eval: Held-out set size
        seed: Seed of the evaluation stream
        blank_undefined_auroc: Leave AUROC empty instead of raising when the
            held-out set holds a single teacher class

    Returns:
        EvalMetrics; ``auroc`` is None for tasks with more than two classes.
        A binary task whose held-out set holds one teacher class raises
        UndefinedMetricError unless blank_undefined_auroc is set.
    """
    if n_eval < 1:
        raise ContractError(f"n_eval must be >= 1, got {n_eval}")
    rng = Rng(seed).split(STREAM_EVAL)
    x = sample_inputs(task, rng, n_eval)
    soft = teacher_probabilities(task, x)
    logits = _as_logits(forward_fn(x))
    if logits.shape != soft.shape:
        raise DimensionError(f"Model produced logits of shape {logits.shape}, expected {soft.shape}")

    log_probs = log_softmax_rows(Tensor(logits)).data
    cross_entropy = float(-(soft * log_probs).sum(axis=1).mean())
    teacher_class = soft.argmax(axis=1)
    accuracy = float((logits.argmax(axis=1) == teacher_class).mean())
    score = None
    if task.n_classes == 2:
        try:
            score = auroc(np.exp(log_probs[:, 1]), (teacher_class == 1).astype(int))
        except UndefinedMetricError:
            if not blank_undefined_auroc:
                raise
    return EvalMetrics(cross_entropy=cross_entropy, accuracy=accuracy, auroc=score)
