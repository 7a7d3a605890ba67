"""Sample command for the paired WAE CLI."""

from pathlib import Path
from typing import Optional, Tuple

import click

from ...domain.entities.run import DEFAULT_SIGMAS, SamplingRequest, SamplingResult
from ...domain.use_cases.sampling_use_case import SamplingUseCase
from ...infrastructure.logger import get_logger
from .errors import show_error_output


def parse_sigmas(text: str) -> Tuple[float, ...]:
    """Parse a comma-separated sigma ladder such as ``-1,-0.5,0,0.5,1``."""
    try:
        values = tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise click.BadParameter(f"'{text}' is not a comma-separated list of numbers")
    if not values:
        raise click.BadParameter("At least one sigma is required")
    return values


@click.command()
@click.option(
    "--checkpoint",
    "-k",
    required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Trained checkpoint archive",
)
@click.option(
    "--condition-input",
    "-i",
    required=True,
    help="Test-set index or path of an array file with one conditioning sample",
)
@click.option(
    "--n",
    "-n",
    "n",
    default=64,
    show_default=True,
    type=click.IntRange(2),
    help="Number of conditional samples",
)
@click.option(
    "--sigmas",
    default=",".join(f"{s:g}" for s in DEFAULT_SIGMAS),
    show_default=True,
    help="Comma-separated perturbation scales of the private latent axis",
)
@click.option(
    "--axis", type=click.IntRange(0), help="Private axis to perturb (seeded if omitted)"
)
@click.option("--seed", "-s", default=0, show_default=True, type=click.IntRange(0))
@click.option(
    "--out",
    "-o",
    type=click.Path(file_okay=False, dir_okay=True),
    help="Output directory (default: <run>/samples/condition_<id>)",
)
@click.option(
    "--reverse", is_flag=True, help="Sample X2 given X1 instead of X1 given X2"
)
@click.pass_context
def sample(
    ctx: click.Context,
    checkpoint: str,
    condition_input: str,
    n: int,
    sigmas: str,
    axis: Optional[int],
    seed: int,
    out: Optional[str],
    reverse: bool,
) -> None:
    """
    Draw conditional samples for one conditioning input.

    Writes the condition, point estimate, sigma ladder, samples, mean and
    pixelwise std as arrays, plus a grid (images) or scatter plot (vectors).
    """

    def _show_success_output(result: SamplingResult) -> None:
        click.echo("\n=== Sampling Results ===")
        click.echo(f"Config hash: {result.config_hash}")
        click.echo(f"Output directory: {result.output_dir}")
        if result.axis_index is not None:
            click.echo(f"Perturbed axis: {result.axis_index}")
        click.echo(f"Figure: {result.grid_path}")
        click.echo("Arrays:")
        for path in result.array_paths:
            click.echo(f"   {path}")
        if result.dead_private_block:
            click.echo(
                click.style("WARNING:", fg="yellow", bold=True)
                + " The private block z1 has no effect on the decoder output"
            )

    logger = get_logger(__name__)
    ladder = parse_sigmas(sigmas)

    try:
        request = SamplingRequest(
            checkpoint_path=Path(checkpoint),
            condition=condition_input,
            n=n,
            sigmas=ladder,
            axis_index=axis,
            seed=seed,
            output_dir=Path(out) if out else None,
            reverse=reverse,
        )
        result = SamplingUseCase(logger).execute(request)
        _show_success_output(result)
    except Exception as e:
        show_error_output(e, logger, "Sampling")
