#!/usr/bin/env python3
"""
Co-train a Student nested inside its Teaching Assistant.

Runs the training loop described by a run config and writes, per seed, a
metrics CSV and a checkpoint holding every model tensor plus the Shampoo
accumulators.

Usage:
    # Train with a config file
    matta-train --config configs/default.json

    # Override the output directory and step count
    matta-train --config configs/default.json --output-dir runs/quick --steps 500

    # Multi-seed configs ("seeds": [0, 1, 2]) write one sub-directory per seed
    matta-train --config configs/seeds.json
"""

import argparse
from dataclasses import replace
from pathlib import Path

from ..harness import load_run_config, resolve_output_dir, run_train
from ..utils.console import log_info, log_success, log_verbose
from ..utils.errors import ConfigError
from .common import add_output_flags, run_command


def train(args: argparse.Namespace) -> None:
    config = load_run_config(Path(args.config))
    if args.steps is not None:
        if args.steps < 0:
            raise ConfigError(f"--steps must be >= 0, got {args.steps}")
        config = replace(config, steps=args.steps)
    if args.seed is not None:
        config = replace(config, seed=args.seed, seeds=())
    output_dir, note = resolve_output_dir(args.output_dir, config)
    if note:
        log_verbose(note)

    seeds = config.seed_list
    for seed in seeds:
        run_dir = output_dir if len(seeds) == 1 else output_dir / f"seed-{seed}"
        log_info(f"\nTraining seed {seed} for {config.steps} steps ({config.sharing}, {config.optimizer.method})")
        result = run_train(replace(config, seed=seed, seeds=()), run_dir, progress=log_verbose)
        metrics = result.final_metrics
        log_success(
            f"seed {seed}: eval_ce_s={metrics['eval_ce_s']:.6f} eval_ce_ta={metrics['eval_ce_ta']:.6f}"
        )
        log_info(f"  metrics:    {result.metrics_path}")
        log_info(f"  checkpoint: {result.checkpoint_path}")


def main():
    """Main entry point for matta-train command."""
    parser = argparse.ArgumentParser(
        description="Co-train a Student and its Teaching Assistant (MatTA)",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Train with the default config
  matta-train --config configs/default.json

  # Short run into a scratch directory
  matta-train --config configs/default.json --steps 200 --output-dir runs/scratch

Environment:
  MATTA_OUTPUT_DIR   Output directory when neither --output-dir nor output_dir is set
  MATTA_DEBUG        Same as --debug

Exit codes: 0 success, 1 config/checkpoint error, 2 numerical failure.
See docs/train.md and docs/configuration.md for details.
        """,
    )
    parser.add_argument("--config", required=True, help="Run config (.json, or .yml/.yaml)")
    parser.add_argument("--output-dir", help="Where to write metrics.csv and checkpoint.matt")
    parser.add_argument("--steps", type=int, help="Override the number of training steps")
    parser.add_argument("--seed", type=int, help="Train a single seed, ignoring the config's seed list")
    add_output_flags(parser)

    args = parser.parse_args()
    run_command(train, args)


if __name__ == "__main__":
    main()
