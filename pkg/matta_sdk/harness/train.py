"""
Co-training loop.

Each step draws a fresh batch from the frozen Teacher, runs both paths, forms
the composite loss with the curriculum-modulated distillation weight and
updates every parameter tensor exactly once.
"""

import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from ..diffcore import STREAM_INIT, STREAM_TRAIN, Graph, ParameterScope, Rng, backward
from ..losses import matta_loss
from ..matlayers import MatTAModel, model_forward, model_new, path_forward
from ..optimizers import build_optimizer
from ..teacher_data import EvalMetrics, SyntheticTask, evaluate, sample_batch, task_from_config
from ..utils.console import log_info
from ..utils.errors import NumericalError
from ..utils.file_utils import CsvWriter
from .checkpoint import Checkpoint, save_checkpoint, to_stored_precision
from .config import RunConfig

METRICS_FILE = "metrics.csv"
CHECKPOINT_FILE = "checkpoint.matt"

METRICS_COLUMNS = (
    "step",
    "wall_ms",
    "w_d_effective",
    "loss_s",
    "loss_ta",
    "loss_d",
    "loss_total",
    "eval_ce_s",
    "eval_ce_ta",
    "eval_auroc_s",
    "eval_auroc_ta",
    "eval_aucloss_s",
    "eval_aucloss_ta",
)

LOSS_KEYS = ("w_d_effective", "loss_s", "loss_ta", "loss_d", "loss_total")


@dataclass(eq=False)
class TrainResult:
    checkpoint: Checkpoint
    model: MatTAModel
    rows: List[Dict[str, object]] = field(default_factory=list)
    final_metrics: Dict[str, Optional[float]] = field(default_factory=dict)
    checkpoint_path: Optional[Path] = None
    metrics_path: Optional[Path] = None


def init_model(config: RunConfig, seed: int) -> MatTAModel:
    return model_new(config.dims, config.sharing, Rng(seed).split(STREAM_INIT), config.model.activation)


def _eval_columns(student: EvalMetrics, ta: EvalMetrics) -> Dict[str, Optional[float]]:
    return {
        "eval_ce_s": student.cross_entropy,
        "eval_ce_ta": ta.cross_entropy,
        "eval_auroc_s": student.auroc,
        "eval_auroc_ta": ta.auroc,
        "eval_aucloss_s": student.aucloss,
        "eval_aucloss_ta": ta.aucloss,
    }


def evaluate_paths(model: MatTAModel, task: SyntheticTask, n_eval: int, seed: int) -> Dict[str, Optional[float]]:
    """Held-out metrics of the Student and TA paths on the same evaluation set."""
    student = evaluate(lambda x: path_forward(model, x, "student"), task, n_eval, seed, blank_undefined_auroc=True)
    ta = evaluate(lambda x: path_forward(model, x, "ta"), task, n_eval, seed, blank_undefined_auroc=True)
    return _eval_columns(student, ta)


def round_to_stored_precision(model: MatTAModel) -> None:
    for name, value in model.named_tensors().items():
        model.set_tensor(name, to_stored_precision(value))


def _diverged(step: int, last: Dict[str, float], detail: str) -> NumericalError:
    return NumericalError(
        f"{detail} at step {step}",
        step=step,
        last_metrics=last,
        fix_instructions=[
            "Lower optimizer.lr (or optimizer.ta_lr)",
            "Raise optimizer.epsilon when training with Shampoo",
        ],
    )


def _train_step(model, optimizer, x, y, weights, curriculum, step: int) -> Optional[Dict[str, float]]:
    """One forward, backward and optimizer step; None when a loss term is non-finite."""
    graph = Graph()
    scope = ParameterScope(graph)
    logits_s, logits_ta = model_forward(model, x, scope)
    terms = matta_loss(logits_s, logits_ta, y, weights, curriculum, step)
    values = terms.values()
    if not all(math.isfinite(v) for v in values.values()):
        return None
    backward(graph, terms.total)
    optimizer.step(model, scope.gradients())
    for name, value in model.named_tensors().items():
        if not np.all(np.isfinite(value)):
            raise NumericalError(f"Parameter {name} became non-finite")
    return values


def run_train(
    config: RunConfig,
    output_dir: Optional[Path] = None,
    progress: Callable[[str], None] = log_info,
) -> TrainResult:
    """
    Train one MatTA model with ``config.seed``.

    With an output directory the metrics CSV and checkpoint are written there;
    without one the run stays in memory. The final evaluation is taken on the
    model at checkpoint precision.

    Args:
        config: Validated run config.
        output_dir: Where metrics.csv and the checkpoint go; None keeps everything in memory.
        progress: Receives one human-readable line per evaluation.

    Returns:
        TrainResult with the trained model, its checkpoint and the metric rows.
    """
    seed = config.seed
    task = task_from_config(config.task, seed)
    model = init_model(config, seed)
    optimizer = build_optimizer(config.optimizer, model)
    weights = config.loss.weights()
    curriculum = config.loss.schedule()
    train_rng = Rng(seed).split(STREAM_TRAIN)
    eval_seed = config.effective_eval_seed
    log_every = config.effective_log_every

    writer = None
    metrics_path = checkpoint_path = None
    if output_dir is not None:
        output_dir = Path(output_dir)
        metrics_path = output_dir / METRICS_FILE
        checkpoint_path = output_dir / CHECKPOINT_FILE
        writer = CsvWriter(metrics_path, METRICS_COLUMNS)

    rows: List[Dict[str, object]] = []
    started = time.perf_counter()

    def emit(row: Dict[str, object]) -> None:
        row["wall_ms"] = int((time.perf_counter() - started) * 1000) if config.record_wall_clock else 0
        rows.append(row)
        if writer is not None:
            writer.write_row(row)

    last: Dict[str, float] = {}
    final_step = max(config.steps - 1, 0)
    for step in range(config.steps):
        x, y = sample_batch(task, train_rng, config.batch_size)
        try:
            values = _train_step(model, optimizer, x, y, weights, curriculum, step)
            if values is None:
                raise _diverged(step, last, "Training loss became non-finite")
            last = {"step": step, **values}
            if step == final_step:
                break
            if step % log_every == 0:
                row: Dict[str, object] = {"step": step, **values}
                if step % config.eval_every == 0:
                    row.update(evaluate_paths(model, task, config.eval_n, eval_seed))
                emit(row)
                progress(f"  step {step}: loss_total={values['loss_total']:.6f} w_d={values['w_d_effective']:.4f}")
        except NumericalError as e:
            if e.step is not None:
                raise
            raise _diverged(step, last, e.message) from e

    try:
        round_to_stored_precision(model)
        final_metrics = evaluate_paths(model, task, config.eval_n, eval_seed)
    except NumericalError as e:
        raise _diverged(final_step, last, e.message) from e
    final_row: Dict[str, object] = {"step": final_step}
    final_row.update({key: last.get(key) for key in LOSS_KEYS})
    final_row.update(final_metrics)
    emit(final_row)
    progress(
        f"  final step {final_step}: eval_ce_s={final_metrics['eval_ce_s']:.6f} "
        f"eval_ce_ta={final_metrics['eval_ce_ta']:.6f}"
    )

    tensors = dict(model.named_tensors())
    tensors.update({name: to_stored_precision(v) for name, v in optimizer.state_tensors().items()})
    checkpoint = Checkpoint(
        config=config.to_dict(),
        tensors=tensors,
        final_step=config.steps,
        metrics=dict(final_metrics),
    )
    if checkpoint_path is not None:
        save_checkpoint(checkpoint_path, checkpoint)
    return TrainResult(
        checkpoint=checkpoint,
        model=model,
        rows=rows,
        final_metrics=final_metrics,
        checkpoint_path=checkpoint_path,
        metrics_path=metrics_path,
    )
