#!/usr/bin/env python3
"""
Dump the Shampoo preconditioner structure of one nested layer.

Writes the correlation heatmap (PGM, PNG when Pillow is installed, CSV) of
the accumulator over the layer's hidden dimension and appends Student-block,
TA-extra-block and cross-block statistics to preconditioner_stats.csv.

Usage:
    matta-dump-preconditioner --checkpoint runs/default/checkpoint.matt --layer blocks.0.up
"""

import argparse
from pathlib import Path

from ..harness import dump_preconditioner
from ..utils.console import log_info, log_success
from .common import add_output_flags, run_command


def dump(args: argparse.Namespace) -> None:
    checkpoint_path = Path(args.checkpoint)
    output_dir = Path(args.output_dir) if args.output_dir else checkpoint_path.parent / "preconditioner"
    log_info(f"\nPreconditioner of {args.layer} in {checkpoint_path}")
    result = dump_preconditioner(checkpoint_path, args.layer, output_dir)
    for kind, path in result.paths.items():
        log_info(f"  {kind:>5}: {path}")
    log_success(f"within/cross ratio {result.stats.ratio:.3f}")


def main():
    """Main entry point for matta-dump-preconditioner command."""
    parser = argparse.ArgumentParser(
        description="Dump the preconditioner correlation structure of a nested layer",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  matta-dump-preconditioner --checkpoint runs/default/checkpoint.matt --layer blocks.0.up
  matta-dump-preconditioner --checkpoint runs/default/checkpoint.matt --layer blocks.3.down --output-dir plots

Needs a checkpoint trained with optimizer.method "shampoo" and granularity "joint".
        """,
    )
    parser.add_argument("--checkpoint", required=True, help="Checkpoint written by matta-train")
    parser.add_argument("--layer", required=True, help="Layer name: blocks.<i>.up or blocks.<i>.down")
    parser.add_argument("--output-dir", help="Directory for the heatmap files (default: <checkpoint dir>/preconditioner)")
    add_output_flags(parser)

    args = parser.parse_args()
    run_command(dump, args)


if __name__ == "__main__":
    main()
