"""Error reporting shared by the CLI commands."""

import json
import logging
import sys
from typing import NoReturn

import click

from ...domain.exceptions import ConfigValidationError

EXIT_FAILURE = 1
EXIT_CONFIG_INVALID = 2


def show_error_output(
    exception: Exception, logger: logging.Logger, action: str
) -> NoReturn:
    """
    Report a failed command and exit.

    Prints a red ERROR line, every violated field of a configuration error
    and one JSON line ``{"error", "message", "fields"}`` to stderr.
    """
    fields = list(getattr(exception, "violations", []))
    logger.error(f"{action} failed: {exception}")
    click.echo(
        click.style("ERROR:", fg="red", bold=True) + f" {action} failed: {exception}",
        err=True,
    )
    for field in fields:
        click.echo(f"   - {field}", err=True)
    click.echo(
        json.dumps(
            {
                "error": type(exception).__name__,
                "message": str(exception),
                "fields": fields,
            },
            sort_keys=True,
        ),
        err=True,
    )
    if isinstance(exception, ConfigValidationError):
        sys.exit(EXIT_CONFIG_INVALID)
    sys.exit(EXIT_FAILURE)
