#!/usr/bin/env python3
"""
Sweep the cost-quality frontier of a co-trained model.

Evaluates the Student, one wide-narrow-wide sub-model per k and the TA, and
writes frontier.csv with parameter counts and held-out metrics.

Usage:
    matta-frontier --checkpoint runs/default/checkpoint.matt
    matta-frontier --checkpoint runs/default/checkpoint.matt --ks 0 2 4 6 --workers 4
"""

import argparse
from pathlib import Path

from ..harness import load_checkpoint, parse_run_config, resolve_workers, run_frontier
from ..utils.console import log_info, log_success, log_verbose
from .common import add_output_flags, run_command


def frontier(args: argparse.Namespace) -> None:
    checkpoint_path = Path(args.checkpoint)
    ckpt = load_checkpoint(checkpoint_path)
    config = parse_run_config(ckpt.config)
    workers, note = resolve_workers(args.workers, config)
    if note:
        log_verbose(note)
    output_dir = Path(args.output_dir) if args.output_dir else checkpoint_path.parent

    log_info(f"\nFrontier sweep of {checkpoint_path}")
    rows = run_frontier(ckpt, args.ks, output_dir, workers=workers, progress=log_verbose)
    for row in rows:
        log_info(f"  {row['label']:>10}  params={row['param_count_total']:>8}  eval_ce={row['eval_ce']:.6f}")
    log_success(f"Wrote {len(rows)} rows to {output_dir / 'frontier.csv'}")


def main():
    """Main entry point for matta-frontier command."""
    parser = argparse.ArgumentParser(
        description="Evaluate the Mix'n'Match frontier of a co-trained model",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Default ks (0, 2, 4, ... up to the block count, or frontier.ks from the config)
  matta-frontier --checkpoint runs/default/checkpoint.matt

  # Explicit ks, four evaluation workers
  matta-frontier --checkpoint runs/default/checkpoint.matt --ks 0 1 2 3 --workers 4

Environment:
  MATTA_WORKERS   Worker count when neither --workers nor workers is set

frontier.csv is written next to the checkpoint unless --output-dir is given.
        """,
    )
    parser.add_argument("--checkpoint", required=True, help="Checkpoint written by matta-train")
    parser.add_argument("--ks", type=int, nargs="+", help="Wide-block counts, ascending")
    parser.add_argument("--output-dir", help="Directory for frontier.csv")
    parser.add_argument("--workers", type=int, help="Parallel evaluations (default: 1)")
    add_output_flags(parser)

    args = parser.parse_args()
    run_command(frontier, args)


if __name__ == "__main__":
    main()
