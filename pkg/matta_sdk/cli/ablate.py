#!/usr/bin/env python3
"""
Run the optimizer x objective and sharing ablation grids.

Trains a Student-alone baseline, Shampoo-only, MatTA without Shampoo and MatTA
with Shampoo (plus shared vs unshared-blocks) for every seed of the config,
and reports each cell's Student metrics relative to the baseline.

Usage:
    matta-ablate --config configs/default.json
    matta-ablate --config configs/default.json --workers 4 --output-dir runs/ablation
"""

import argparse
from pathlib import Path

from ..harness import load_run_config, resolve_output_dir, resolve_workers, run_ablation_grid, summarize
from ..utils.console import log_info, log_success, log_verbose
from .common import add_output_flags, run_command


def _pct(value) -> str:
    return "n/a" if value is None else f"{100.0 * value:+.2f}%"


def ablate(args: argparse.Namespace) -> None:
    config = load_run_config(Path(args.config))
    output_dir, note = resolve_output_dir(args.output_dir, config)
    if note:
        log_verbose(note)
    workers, note = resolve_workers(args.workers, config)
    if note:
        log_verbose(note)

    log_info(f"\nAblation over seeds {config.seed_list} ({config.steps} steps each)")
    rows = run_ablation_grid(config, output_dir, workers=workers, progress=log_verbose)

    log_info("\nRelative change vs baseline (negative is better):")
    for entry in summarize(rows):
        line = f"  {entry['cell']:>22}  CE {_pct(entry['mean_rel_ce'])}  AucLoss {_pct(entry['mean_rel_aucloss'])}"
        if entry.get("super_additive_ce") is not None:
            line += f"  super-additive(CE)={entry['super_additive_ce']}"
        log_info(line)
    log_success(f"Wrote ablation.csv and ablation_summary.csv to {output_dir}")


def main():
    """Main entry point for matta-ablate command."""
    parser = argparse.ArgumentParser(
        description="Run the MatTA x Shampoo and sharing ablation grids",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  matta-ablate --config configs/default.json --output-dir runs/ablation

  # Restrict grids and optimizers in the config's "ablation" section:
  #   {"ablation": {"grids": ["optimizer"], "first_order": "adam"}}

Environment:
  MATTA_OUTPUT_DIR, MATTA_WORKERS   Defaults for --output-dir and --workers
        """,
    )
    parser.add_argument("--config", required=True, help="Base run config")
    parser.add_argument("--output-dir", help="Directory for ablation.csv, ablation_summary.csv and per-cell runs")
    parser.add_argument("--workers", type=int, help="Parallel training runs (default: 1)")
    add_output_flags(parser)

    args = parser.parse_args()
    run_command(ablate, args)


if __name__ == "__main__":
    main()
