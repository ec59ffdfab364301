"""
Preconditioner structure dump for one nested layer.

Reads the Shampoo accumulator that indexes the layer's nested (hidden)
dimension from a training checkpoint, normalizes it to a correlation matrix
and writes the heatmap plus Student-block / TA-extra-block statistics.
"""

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict

import numpy as np

from ..optimizers import BlockStats, block_stats
from ..utils.console import log_info, log_warning
from ..utils.errors import BoundsError, CheckpointError, ContractError
from ..utils.file_utils import append_csv_row, write_matrix_csv, write_pgm
from .checkpoint import OPTIM_PREFIX, load_checkpoint
from .config import parse_run_config

try:
    from PIL import Image
except ImportError:
    # Pillow is optional - the PGM and CSV are always written
    Image = None

STATS_FILE = "preconditioner_stats.csv"
STATS_COLUMNS = (
    "layer",
    "side",
    "split",
    "size",
    "student_mean_abs",
    "ta_extra_mean_abs",
    "cross_mean_abs",
    "within_mean_abs",
    "within_cross_ratio",
    "zero_diagonal",
)
PNG_CELL_PIXELS = 8

_LAYER = re.compile(r"^blocks\.(\d+)\.(up|down)$")


@dataclass(eq=False)
class PreconditionerDump:
    layer: str
    side: str
    correlation: np.ndarray
    stats: BlockStats
    paths: Dict[str, Path] = field(default_factory=dict)


def parse_layer(layer: str, n_total: int):
    """Return (block index, dense name) for names like ``blocks.2.up``."""
    match = _LAYER.match(layer)
    if not match:
        raise ContractError(
            f"Unknown layer name '{layer}'",
            fix_instructions=["Use blocks.<i>.up or blocks.<i>.down (e.g. blocks.0.up)"],
        )
    index = int(match.group(1))
    if index >= n_total:
        raise BoundsError(f"Layer '{layer}' does not exist: the model has {n_total} blocks")
    return index, match.group(2)


def write_png(magnitudes: np.ndarray, output_path: Path, cell_pixels: int = PNG_CELL_PIXELS) -> bool:
    """Greyscale PNG of values in [0, 1], each entry drawn as a square cell. Needs Pillow."""
    if Image is None:
        return False
    grey = np.rint(np.clip(magnitudes, 0.0, 1.0) * 255).astype(np.uint8)
    image = Image.fromarray(grey)
    rows, cols = grey.shape
    image = image.resize((cols * cell_pixels, rows * cell_pixels), Image.NEAREST)
    image.save(output_path)
    return True


def dump_preconditioner(
    checkpoint_path: Path,
    layer: str,
    output_dir: Path,
    progress: Callable[[str], None] = log_info,
) -> PreconditionerDump:
    """
    Write ``<layer>.corr.{pgm,png,csv}`` and append a row to the stats file.

    The up projection's nested dimension is its output (right accumulator),
    the down projection's is its input (left accumulator). The block split is h_s.
    """
    ckpt = load_checkpoint(Path(checkpoint_path))
    if ckpt.is_standalone:
        raise CheckpointError(
            "Extracted sub-model checkpoints carry no optimizer state",
            fix_instructions=["Pass the checkpoint written by matta-train"],
        )
    config = parse_run_config(ckpt.config)
    _, dense_name = parse_layer(layer, config.dims.n_total)
    side = "right" if dense_name == "up" else "left"
    key = f"{OPTIM_PREFIX}{layer}.{side}"
    accumulator = ckpt.tensors.get(key)
    if accumulator is None:
        raise CheckpointError(
            f"Checkpoint has no Shampoo accumulator '{key}'",
            fix_instructions=[
                "Train with optimizer.method = \"shampoo\" and optimizer.granularity = \"joint\"",
            ],
        )

    correlation, stats = block_stats(accumulator, config.model.h_s)
    if not np.isfinite(stats.student_mean) or stats.student_mean == 0.0:
        log_warning(f"{layer}: within-Student mean |C| is {stats.student_mean!r}")

    output_dir = Path(output_dir)
    stem = f"{layer}.corr"
    magnitudes = np.abs(correlation)
    paths = {
        "csv": output_dir / f"{stem}.csv",
        "pgm": output_dir / f"{stem}.pgm",
        "stats": output_dir / STATS_FILE,
    }
    write_matrix_csv(correlation, paths["csv"])
    write_pgm(magnitudes, paths["pgm"], comment=f"|corr| {layer} {side} split={stats.split}")
    if write_png(magnitudes, output_dir / f"{stem}.png"):
        paths["png"] = output_dir / f"{stem}.png"
    else:
        log_warning("Pillow not installed; skipping PNG heatmap (pip install Pillow)")
    append_csv_row(paths["stats"], STATS_COLUMNS, {"layer": layer, "side": side, **stats.as_row()})

    progress(
        f"  {layer} ({side}): student={stats.student_mean:.4f} ta_extra={stats.ta_extra_mean:.4f} "
        f"cross={stats.cross_mean:.4f} ratio={stats.ratio:.3f}"
    )
    return PreconditionerDump(layer=layer, side=side, correlation=correlation, stats=stats, paths=paths)
