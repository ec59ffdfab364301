"""Run configuration, training loop, checkpoints, frontier sweep and ablations."""

from .ablation import ABLATION_COLUMNS, SUMMARY_COLUMNS, ablation_cells, relative_change, run_ablation_grid, summarize
from .checkpoint import (
    Checkpoint,
    load_checkpoint,
    model_from_checkpoint,
    model_from_tensors,
    save_checkpoint,
    to_stored_precision,
)
from .config import RunConfig, load_run_config, parse_run_config, resolve_output_dir, resolve_workers
from .frontier import FRONTIER_COLUMNS, evaluate_checkpoint, run_extract, run_frontier
from .preconditioner import PreconditionerDump, dump_preconditioner
from .train import METRICS_COLUMNS, TrainResult, evaluate_paths, init_model, run_train

__all__ = [
    "ABLATION_COLUMNS",
    "Checkpoint",
    "FRONTIER_COLUMNS",
    "METRICS_COLUMNS",
    "PreconditionerDump",
    "RunConfig",
    "SUMMARY_COLUMNS",
    "TrainResult",
    "ablation_cells",
    "dump_preconditioner",
    "evaluate_checkpoint",
    "evaluate_paths",
    "init_model",
    "load_checkpoint",
    "load_run_config",
    "model_from_checkpoint",
    "model_from_tensors",
    "parse_run_config",
    "relative_change",
    "resolve_output_dir",
    "resolve_workers",
    "run_ablation_grid",
    "run_extract",
    "run_frontier",
    "run_train",
    "save_checkpoint",
    "summarize",
    "to_stored_precision",
]
