"""Plot command for the paired WAE CLI."""

from pathlib import Path
from typing import Optional

import click

from ...domain.entities.run import PlotRequest
from ...domain.use_cases.plot_use_case import PlotUseCase
from ...infrastructure.logger import get_logger
from .errors import show_error_output


@click.command()
@click.option(
    "--samples-dir",
    "-d",
    required=True,
    type=click.Path(exists=True, file_okay=False, dir_okay=True),
    help="Directory with the arrays written by one or more sample runs",
)
@click.option(
    "--out",
    "-o",
    type=click.Path(dir_okay=False),
    help="PNG path (default: grid.png or scatter.png in the samples directory)",
)
@click.pass_context
def plot(ctx: click.Context, samples_dir: str, out: Optional[str]) -> None:
    """Render one figure from every sample set under a directory."""
    logger = get_logger(__name__)

    try:
        request = PlotRequest(
            samples_dir=Path(samples_dir), output_path=Path(out) if out else None
        )
        result = PlotUseCase(logger).execute(request)
        click.echo(
            click.style("SUCCESS:", fg="green", bold=True)
            + f" Rendered {result.rows} row(s) to {result.output_path}"
        )
        click.echo(f"   Config hash: {result.config_hash}")
    except Exception as e:
        show_error_output(e, logger, "Plotting")
