"""CLI entrypoints package."""

from .cli import cli

__all__ = ["cli"]
