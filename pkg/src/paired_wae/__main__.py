"""Main entry point for running paired_wae as a module."""

from .entrypoints.cli import cli

if __name__ == "__main__":
    cli()
