#!/usr/bin/env python3
"""
Single entry point that forwards to the per-command scripts.

Usage:
    matta train --config configs/default.json
    matta extract --checkpoint runs/default/checkpoint.matt --k 2 --out extracted
    matta eval --checkpoint runs/default/checkpoint.matt --label ta
    matta frontier --checkpoint runs/default/checkpoint.matt --ks 0 2 4
    matta ablate --config configs/default.json
    matta dump-preconditioner --checkpoint runs/default/checkpoint.matt --layer blocks.0.up
"""

import importlib
import sys

from .. import __version__

COMMANDS = {
    "train": ("matta_sdk.cli.train", "Co-train a Student and its TA"),
    "extract": ("matta_sdk.cli.extract", "Write Mix'n'Match sub-models as standalone checkpoints"),
    "eval": ("matta_sdk.cli.evaluate", "Evaluate a co-training or extracted checkpoint"),
    "frontier": ("matta_sdk.cli.frontier", "Sweep the cost-quality frontier"),
    "ablate": ("matta_sdk.cli.ablate", "Run the MatTA x Shampoo and sharing ablations"),
    "dump-preconditioner": ("matta_sdk.cli.dump_preconditioner", "Dump a layer's preconditioner structure"),
}


def show_help() -> None:
    print(f"matta-elastic-sdk {__version__}\n")
    print("usage: matta <command> [options]\n")
    print("Commands:")
    for name, (_, summary) in COMMANDS.items():
        print(f"  {name:<21} {summary}")
    print("\nRun 'matta <command> --help' for the options of one command.")
    print("Exit codes: 0 success, 1 config/checkpoint error, 2 numerical failure.")


def main():
    """Main entry point for the matta command."""
    if len(sys.argv) < 2 or sys.argv[1] in ("-h", "--help", "help"):
        show_help()
        sys.exit(0)
    if sys.argv[1] == "--version":
        print(__version__)
        sys.exit(0)

    name = sys.argv[1]
    if name not in COMMANDS:
        print(f"✗ Error: unknown command '{name}'", file=sys.stderr)
        print(f"Available commands: {', '.join(COMMANDS)}", file=sys.stderr)
        sys.exit(1)

    module = importlib.import_module(COMMANDS[name][0])
    sys.argv = [f"matta {name}"] + sys.argv[2:]
    module.main()


if __name__ == "__main__":
    main()
