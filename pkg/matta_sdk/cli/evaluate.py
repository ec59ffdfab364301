#!/usr/bin/env python3
"""
Evaluate a checkpoint on its run's held-out set.

A co-training checkpoint is evaluated through the sub-model selected by
--label (default: the Student). An extracted checkpoint is evaluated as is.

Usage:
    matta-eval --checkpoint runs/default/checkpoint.matt
    matta-eval --checkpoint runs/default/checkpoint.matt --label wnw-k2
    matta-eval --checkpoint extracted/ta.matt --format json
"""

import argparse
import json
from pathlib import Path

from ..harness import evaluate_checkpoint
from ..utils.console import log_info
from .common import add_output_flags, run_command


def _fmt(value) -> str:
    return "n/a" if value is None else f"{value:.6f}"


def evaluate(args: argparse.Namespace) -> None:
    result = evaluate_checkpoint(Path(args.checkpoint), args.label)
    if args.format == "json":
        print(json.dumps(result, indent=2))
        return
    log_info(f"\n{result['label']} ({args.checkpoint})")
    log_info(f"  parameters:     {result['param_count_total']} ({result['param_count_nonembedding']} non-embedding)")
    log_info(f"  cross-entropy:  {_fmt(result['eval_ce'])}")
    log_info(f"  accuracy:       {_fmt(result['eval_accuracy'])}")
    log_info(f"  AUROC:          {_fmt(result['eval_auroc'])}")
    log_info(f"  AucLoss:        {_fmt(result['eval_aucloss'])}")


def main():
    """Main entry point for matta-eval command."""
    parser = argparse.ArgumentParser(
        description="Evaluate a co-training or extracted checkpoint",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Student of a co-training run
  matta-eval --checkpoint runs/default/checkpoint.matt

  # A wide-narrow-wide sub-model, as JSON for scripting
  matta-eval --checkpoint runs/default/checkpoint.matt --label wnw-k2 --format json
        """,
    )
    parser.add_argument("--checkpoint", required=True, help="Checkpoint to evaluate")
    parser.add_argument("--label", help="Sub-model of a co-training checkpoint: student, ta or wnw-k<K>")
    parser.add_argument("--format", choices=["text", "json"], default="text", help="Output format (default: text)")
    add_output_flags(parser)

    args = parser.parse_args()
    run_command(evaluate, args)


if __name__ == "__main__":
    main()
