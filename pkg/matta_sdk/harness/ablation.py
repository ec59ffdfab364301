"""
Ablation grids over the optimizer and the MatTA objective, and over sharing.

Every cell is trained once per seed. Improvements are relative changes of the
Student's held-out metrics against the same seed's baseline cell, so a
negative value means the cell beat the baseline.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from ..utils.console import log_info, log_verbose
from ..utils.file_utils import CsvWriter
from .config import LossSection, RunConfig
from .train import run_train

ABLATION_FILE = "ablation.csv"
SUMMARY_FILE = "ablation_summary.csv"

BASELINE = "baseline"
SHAMPOO_ONLY = "shampoo-only"
MATTA_NO_SHAMPOO = "matta-no-shampoo"
MATTA_SHAMPOO = "matta-shampoo"

ABLATION_COLUMNS = (
    "grid",
    "cell",
    "seed",
    "optimizer",
    "sharing",
    "objective",
    "eval_ce_s",
    "eval_aucloss_s",
    "eval_ce_ta",
    "eval_aucloss_ta",
    "rel_ce",
    "rel_aucloss",
)

SUMMARY_COLUMNS = (
    "grid",
    "cell",
    "n_seeds",
    "mean_eval_ce_s",
    "mean_eval_aucloss_s",
    "mean_rel_ce",
    "mean_rel_aucloss",
    "super_additive_ce",
    "super_additive_aucloss",
)


@dataclass(frozen=True)
class AblationCell:
    grid: str
    name: str
    config: RunConfig
    objective: str


def _student_alone(loss: LossSection) -> LossSection:
    """Student cross-entropy only; the TA receives no gradient."""
    return replace(loss, w_s=1.0, w_ta=0.0, w_d=0.0, curriculum=False)


def _with_method(config: RunConfig, method: str, lr: Optional[float]) -> RunConfig:
    optimizer = replace(config.optimizer, method=method, lr=config.optimizer.lr if lr is None else lr)
    return replace(config, optimizer=optimizer)


def ablation_cells(base: RunConfig) -> List[AblationCell]:
    """Cells in output order; the baseline is always present."""
    settings = base.ablation
    first_order = _with_method(base, settings.first_order, settings.first_order_lr)
    shampoo = _with_method(base, "shampoo", settings.shampoo_lr)
    alone = _student_alone(base.loss)

    cells = [AblationCell("optimizer", BASELINE, replace(first_order, loss=alone), "student-alone")]
    if "optimizer" in settings.grids:
        cells += [
            AblationCell("optimizer", SHAMPOO_ONLY, replace(shampoo, loss=alone), "student-alone"),
            AblationCell("optimizer", MATTA_NO_SHAMPOO, first_order, "matta"),
            AblationCell("optimizer", MATTA_SHAMPOO, shampoo, "matta"),
        ]
    if "sharing" in settings.grids:
        for sharing in ("shared", "unshared-blocks"):
            cells.append(AblationCell("sharing", f"sharing-{sharing}", replace(base, sharing=sharing), "matta"))
    return cells


def relative_change(value: Optional[float], baseline: Optional[float]) -> Optional[float]:
    if value is None or baseline is None or baseline == 0:
        return None
    return (value - baseline) / baseline


def _mean(values: List[Optional[float]]) -> Optional[float]:
    present = [v for v in values if v is not None]
    return float(np.mean(present)) if present else None


def _super_additive(means: Dict[str, Optional[float]]) -> Optional[bool]:
    """The combined cell beats the sum of the two single interventions."""
    parts = (means.get(SHAMPOO_ONLY), means.get(MATTA_NO_SHAMPOO), means.get(MATTA_SHAMPOO))
    if any(p is None for p in parts):
        return None
    shampoo_only, matta_only, combined = parts
    return combined < shampoo_only + matta_only


def summarize(rows: List[Dict[str, object]]) -> List[Dict[str, object]]:
    """Per-cell means over seeds plus the super-additivity indicator on the combined cell."""
    order: List[tuple] = []
    grouped: Dict[tuple, List[Dict[str, object]]] = {}
    for row in rows:
        key = (row["grid"], row["cell"])
        if key not in grouped:
            order.append(key)
            grouped[key] = []
        grouped[key].append(row)

    summary = []
    for grid, cell in order:
        members = grouped[(grid, cell)]
        summary.append({
            "grid": grid,
            "cell": cell,
            "n_seeds": len(members),
            "mean_eval_ce_s": _mean([r["eval_ce_s"] for r in members]),
            "mean_eval_aucloss_s": _mean([r["eval_aucloss_s"] for r in members]),
            "mean_rel_ce": _mean([r["rel_ce"] for r in members]),
            "mean_rel_aucloss": _mean([r["rel_aucloss"] for r in members]),
        })

    rel_ce = {s["cell"]: s["mean_rel_ce"] for s in summary}
    rel_auc = {s["cell"]: s["mean_rel_aucloss"] for s in summary}
    for entry in summary:
        if entry["cell"] == MATTA_SHAMPOO:
            entry["super_additive_ce"] = _super_additive(rel_ce)
            entry["super_additive_aucloss"] = _super_additive(rel_auc)
    return summary


def run_ablation_grid(
    base: RunConfig,
    output_dir: Optional[Path] = None,
    workers: int = 1,
    progress: Callable[[str], None] = log_info,
) -> List[Dict[str, object]]:
    """
    Train every (cell, seed) pair and report the Student's metrics relative to
    the same seed's baseline. Each run's metrics and checkpoint land under
    ``<output_dir>/cells/<cell>/seed-<seed>/``.

    Args:
        base: Config the cells are derived from; its seed list is used for every cell.
        output_dir: Root for per-run files and the summary CSVs.
        workers: Runs trained in parallel.
        progress: Status line sink.

    Returns:
        One row per (cell, seed) in grid order.
    """
    cells = ablation_cells(base)
    seeds = base.seed_list
    jobs = [(cell, seed) for cell in cells for seed in seeds]
    progress(f"Running {len(cells)} cells x {len(seeds)} seed(s) with {workers} worker(s)")

    def run_one(job):
        cell, seed = job
        run_dir = None
        if output_dir is not None:
            run_dir = Path(output_dir) / "cells" / cell.name / f"seed-{seed}"
        result = run_train(replace(cell.config, seed=seed, seeds=()), run_dir, progress=log_verbose)
        progress(f"  {cell.name} seed {seed}: eval_ce_s={result.final_metrics['eval_ce_s']:.6f}")
        return result.final_metrics

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(run_one, jobs))

    baselines = {
        seed: metrics for (cell, seed), metrics in zip(jobs, results) if cell.name == BASELINE
    }
    rows = []
    for (cell, seed), metrics in zip(jobs, results):
        reference = baselines[seed]
        rows.append({
            "grid": cell.grid,
            "cell": cell.name,
            "seed": seed,
            "optimizer": cell.config.optimizer.method,
            "sharing": cell.config.sharing,
            "objective": cell.objective,
            "eval_ce_s": metrics["eval_ce_s"],
            "eval_aucloss_s": metrics["eval_aucloss_s"],
            "eval_ce_ta": metrics["eval_ce_ta"],
            "eval_aucloss_ta": metrics["eval_aucloss_ta"],
            "rel_ce": relative_change(metrics["eval_ce_s"], reference["eval_ce_s"]),
            "rel_aucloss": relative_change(metrics["eval_aucloss_s"], reference["eval_aucloss_s"]),
        })

    if output_dir is not None:
        CsvWriter(Path(output_dir) / ABLATION_FILE, ABLATION_COLUMNS).write_rows(rows)
        CsvWriter(Path(output_dir) / SUMMARY_FILE, SUMMARY_COLUMNS).write_rows(summarize(rows))
    return rows
