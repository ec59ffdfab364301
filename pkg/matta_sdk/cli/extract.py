#!/usr/bin/env python3
"""
Extract standalone sub-models from a co-training checkpoint.

Each requested k becomes a wide-narrow-wide model (bottom ceil(k/2) and top
floor(k/2) blocks wide); labels select the reserved "student" and "ta"
configurations. Every sub-model is written as its own checkpoint.

Usage:
    matta-extract --checkpoint runs/default/checkpoint.matt --k 2 4 --out runs/default/extracted
    matta-extract --checkpoint runs/default/checkpoint.matt --label student ta --out extracted
"""

import argparse
from pathlib import Path

from ..harness import run_extract
from ..utils.console import log_info, log_success, log_verbose
from .common import add_output_flags, run_command


def extract(args: argparse.Namespace) -> None:
    log_info(f"\nExtracting from {args.checkpoint}")
    paths = run_extract(Path(args.checkpoint), Path(args.out), ks=args.k or (), labels=args.label or (),
                        progress=log_verbose)
    log_success(f"Wrote {len(paths)} sub-model checkpoint(s) to {args.out}")


def main():
    """Main entry point for matta-extract command."""
    parser = argparse.ArgumentParser(
        description="Extract Mix'n'Match sub-models as standalone checkpoints",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Wide-narrow-wide sub-models with 2 and 4 wide blocks
  matta-extract --checkpoint runs/default/checkpoint.matt --k 2 4 --out extracted

  # The reserved Student and TA configurations
  matta-extract --checkpoint runs/default/checkpoint.matt --label student ta --out extracted

Without --k or --label the Student is extracted. Evaluate results with matta-eval.
        """,
    )
    parser.add_argument("--checkpoint", required=True, help="Checkpoint written by matta-train")
    parser.add_argument("--k", type=int, nargs="+", help="Number of wide blocks (one sub-model per value)")
    parser.add_argument("--label", nargs="+", help="Configuration labels: student, ta or wnw-k<K>")
    parser.add_argument("--out", required=True, help="Directory for the extracted checkpoints")
    add_output_flags(parser)

    args = parser.parse_args()
    run_command(extract, args)


if __name__ == "__main__":
    main()
