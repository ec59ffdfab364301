"""CLI commands for matta-elastic-sdk."""
