"""Evaluate command for the paired WAE CLI."""

import json
from pathlib import Path
from typing import Optional

import click

from ...domain.entities.run import EvaluationReport, EvaluationRequest
from ...domain.use_cases.evaluation_use_case import EvaluationUseCase
from ...infrastructure.logger import get_logger
from .errors import show_error_output


@click.command()
@click.option(
    "--checkpoint",
    "-k",
    required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Trained checkpoint archive",
)
@click.option(
    "--oracle/--no-oracle",
    default=True,
    show_default=True,
    help="Compare against the analytic oracle of toy tasks",
)
@click.option(
    "--config",
    "-c",
    "config_path",
    type=click.Path(exists=True, dir_okay=False),
    help="Config file that must match the checkpoint's",
)
@click.option(
    "--metrics",
    "metrics_path",
    type=click.Path(exists=True, dir_okay=False),
    help="Metrics CSV that must match the checkpoint's config",
)
@click.option(
    "--out",
    "-o",
    type=click.Path(dir_okay=False),
    help="Report path (default: evaluation.json next to the checkpoint)",
)
@click.option("--seed", "-s", default=0, show_default=True, type=click.IntRange(0))
@click.option(
    "--strict", is_flag=True, help="Exit with status 1 when any check fails"
)
@click.pass_context
def evaluate(
    ctx: click.Context,
    checkpoint: str,
    oracle: bool,
    config_path: Optional[str],
    metrics_path: Optional[str],
    out: Optional[str],
    seed: int,
    strict: bool,
) -> None:
    """Compute the task-appropriate metrics of a checkpoint."""

    def _show_success_output(report: EvaluationReport) -> None:
        click.echo("\n=== Evaluation Results ===")
        click.echo(f"Task: {report.task}")
        click.echo(f"Config hash: {report.config_hash}")
        for name, value in sorted(report.metrics.items()):
            click.echo(f"   {name}: {value:.6g}")
        for name, passed in sorted(report.checks.items()):
            status = (
                click.style("PASS", fg="green", bold=True)
                if passed
                else click.style("FAIL", fg="red", bold=True)
            )
            click.echo(f"   [{status}] {name}")
        click.echo(f"Report: {report.output_path}")
        click.echo(json.dumps(report.to_dict(), sort_keys=True))

    logger = get_logger(__name__)

    try:
        request = EvaluationRequest(
            checkpoint_path=Path(checkpoint),
            use_oracle=oracle,
            config_path=Path(config_path) if config_path else None,
            metrics_path=Path(metrics_path) if metrics_path else None,
            output_path=Path(out) if out else None,
            seed=seed,
        )
        report = EvaluationUseCase(logger).execute(request)
        _show_success_output(report)
    except Exception as e:
        show_error_output(e, logger, "Evaluation")

    if strict and not report.all_checks_passed:
        ctx.exit(1)
