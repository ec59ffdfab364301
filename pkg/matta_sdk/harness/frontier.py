"""
Frontier sweep, sub-model extraction and checkpoint evaluation.

Every extracted configuration is evaluated on the same held-out set as the
co-training run, so the reserved "student" and "ta" rows reproduce the final
in-training metrics.
"""

from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

from ..extraction import (
    ExtractConfig,
    StandaloneModel,
    config_for_label,
    enumerate_grid,
    materialize,
    standalone_from_tensors,
    wide_narrow_wide_config,
)
from ..teacher_data import EvalMetrics, evaluate, task_from_config
from ..utils.console import log_info
from ..utils.errors import CheckpointError
from ..utils.file_utils import CsvWriter
from .checkpoint import Checkpoint, load_checkpoint, model_from_checkpoint, save_checkpoint
from .config import RunConfig, parse_run_config

FRONTIER_FILE = "frontier.csv"

FRONTIER_COLUMNS = (
    "label",
    "k",
    "param_count_total",
    "param_count_nonembedding",
    "eval_ce",
    "eval_auroc",
    "eval_aucloss",
)


def evaluate_submodel(sub: StandaloneModel, config: RunConfig) -> EvalMetrics:
    task = task_from_config(config.task, config.seed)
    return evaluate(sub.forward, task, config.eval_n, config.effective_eval_seed, blank_undefined_auroc=True)


def _frontier_row(sub: StandaloneModel, cfg: ExtractConfig, config: RunConfig) -> Dict[str, object]:
    metrics = evaluate_submodel(sub, config)
    return {
        "label": cfg.label,
        "k": cfg.k,
        "param_count_total": sub.param_count(include_embedding=True),
        "param_count_nonembedding": sub.param_count(include_embedding=False),
        "eval_ce": metrics.cross_entropy,
        "eval_auroc": metrics.auroc,
        "eval_aucloss": metrics.aucloss,
    }


def _as_checkpoint(source) -> Checkpoint:
    return source if isinstance(source, Checkpoint) else load_checkpoint(Path(source))


def run_frontier(
    source,
    ks: Optional[Sequence[int]] = None,
    output_dir: Optional[Path] = None,
    workers: int = 1,
    progress: Callable[[str], None] = log_info,
) -> List[Dict[str, object]]:
    """
    Materialize and evaluate "student", one wide-narrow-wide model per k and
    "ta". ``source`` is a Checkpoint or a checkpoint path. Rows come back (and
    are written) in grid order whatever the worker count.

    Args:
        source: Co-training Checkpoint or path to one.
        ks: Numbers of TA-exclusive blocks to keep; the run config's list when None.
        output_dir: Where frontier.csv is written, if given.
        workers: Threads evaluating configurations.
        progress: Status line sink.

    Returns:
        One row per configuration.
    """
    config, model = model_from_checkpoint(_as_checkpoint(source))
    dims = config.dims
    ks = config.frontier_ks() if ks is None else list(ks)
    grid = enumerate_grid(dims.n_total, ks, dims.n_extra)
    progress(f"Evaluating {len(grid)} configurations with {workers} worker(s)")

    def run_one(cfg: ExtractConfig) -> Dict[str, object]:
        return _frontier_row(materialize(model, cfg), cfg, config)

    writer = CsvWriter(Path(output_dir) / FRONTIER_FILE, FRONTIER_COLUMNS) if output_dir is not None else None
    rows: List[Dict[str, object]] = []
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        for row in pool.map(run_one, grid):
            rows.append(row)
            if writer is not None:
                writer.write_row(row)
            progress(f"  {row['label']}: params={row['param_count_total']} eval_ce={row['eval_ce']:.6f}")
    return rows


def run_extract(
    source,
    output_dir: Path,
    ks: Sequence[int] = (),
    labels: Sequence[str] = (),
    progress: Callable[[str], None] = log_info,
) -> List[Path]:
    """
    Write one standalone checkpoint per requested k or label into ``output_dir``.

    Args:
        source: Co-training Checkpoint or path to one.
        output_dir: Destination directory.
        ks: Wide-narrow-wide configurations to extract.
        labels: Named configurations ("student", "ta" or "wnw-k<K>").
        progress: Status line sink.

    Returns:
        Paths written, in request order. With neither ks nor labels the Student is extracted.
    """
    ckpt = _as_checkpoint(source)
    config, model = model_from_checkpoint(ckpt)
    dims = config.dims
    configs = [wide_narrow_wide_config(k, dims.n_total, dims.n_extra) for k in ks]
    configs += [config_for_label(label, dims.n_total, dims.n_extra) for label in labels]
    if not configs:
        configs = [config_for_label("student", dims.n_total, dims.n_extra)]

    written = []
    for cfg in configs:
        sub = materialize(model, cfg)
        path = save_checkpoint(
            Path(output_dir) / f"{cfg.label}.matt",
            Checkpoint(
                config=ckpt.config,
                tensors=sub.named_tensors(),
                final_step=ckpt.final_step,
                metrics={
                    "param_count_total": sub.param_count(include_embedding=True),
                    "param_count_nonembedding": sub.param_count(include_embedding=False),
                },
                standalone=sub.header(),
            ),
        )
        progress(f"  {cfg.label}: {sub.param_count()} parameters -> {path}")
        written.append(path)
    return written


def evaluate_checkpoint(source, label: Optional[str] = None) -> Dict[str, object]:
    """
    Evaluate a checkpoint on its run's held-out set.

    A co-training checkpoint is evaluated through the sub-model ``label``
    selects (default "student"); an extracted checkpoint is evaluated as is.

    Args:
        source: Checkpoint or path to one.
        label: Sub-model to evaluate; must match the stored label for an extracted checkpoint.

    Returns:
        Dict with the label, parameter counts and the held-out metrics.
    """
    ckpt = _as_checkpoint(source)
    if ckpt.is_standalone:
        stored_label = str(ckpt.standalone.get("label", ""))
        if label is not None and label != stored_label:
            raise CheckpointError(
                f"Checkpoint holds the extracted sub-model '{stored_label}', not '{label}'",
                fix_instructions=["Drop --label, or pass the co-training checkpoint to choose a sub-model"],
            )
        config = parse_run_config(ckpt.config)
        sub = standalone_from_tensors(ckpt.standalone, ckpt.model_tensors())
        label = stored_label
    else:
        config, model = model_from_checkpoint(ckpt)
        label = label or "student"
        sub = materialize(model, config_for_label(label, config.dims.n_total, config.dims.n_extra))

    metrics = evaluate_submodel(sub, config)
    return {
        "label": label,
        "param_count_total": sub.param_count(include_embedding=True),
        "param_count_nonembedding": sub.param_count(include_embedding=False),
        "eval_ce": metrics.cross_entropy,
        "eval_accuracy": metrics.accuracy,
        "eval_auroc": metrics.auroc,
        "eval_aucloss": metrics.aucloss,
    }
