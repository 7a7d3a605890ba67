"""Train command for the paired WAE CLI."""

from pathlib import Path
from typing import Any, Dict, Optional

import click

from ...domain.entities.run import TrainingRequest, TrainingSummary
from ...domain.entities.tasks import TaskKind
from ...domain.exceptions import ConfigValidationError
from ...domain.use_cases.training_use_case import TrainingUseCase
from ...infrastructure.config_loader import (
    TASK_DEFAULT_PRESET,
    apply_overrides,
    parse_run_config,
    preset_config,
    read_config_tree,
)
from ...infrastructure.logger import get_logger
from .errors import show_error_output


@click.command()
@click.option(
    "--task",
    "-t",
    type=click.Choice(["denoise", "inpaint", "translate"], case_sensitive=False),
    help="Task preset to train when no --config is given",
)
@click.option(
    "--config",
    "-c",
    "config_path",
    type=click.Path(exists=True, dir_okay=False),
    help="JSON run configuration",
)
@click.option("--seed", "-s", type=click.IntRange(0), help="Override the run seed")
@click.option(
    "--out",
    "-o",
    type=click.Path(file_okay=False, dir_okay=True),
    help="Override the output directory",
)
@click.option(
    "--resume",
    type=click.Path(exists=True, dir_okay=False),
    help="Continue training from a checkpoint of the same configuration",
)
@click.option(
    "--max-workers",
    type=click.IntRange(1),
    help="Worker processes for dataset generation "
    "(default: adaptive based on system resources)",
)
@click.pass_context
def train(
    ctx: click.Context,
    task: Optional[str],
    config_path: Optional[str],
    seed: Optional[int],
    out: Optional[str],
    resume: Optional[str],
    max_workers: Optional[int],
) -> None:
    """
    Train a paired model.

    Uses the --config file when given, otherwise the preset of --task.
    Writes config.json, metrics.csv and checkpoint.zip to the output directory.
    """

    def _load_tree() -> Dict[str, Any]:
        if config_path:
            tree = read_config_tree(config_path)
            if task:
                declared_kind = str(tree.get("task", {}).get("kind", ""))
                declared = TaskKind.from_alias(declared_kind)
                if declared != TaskKind.from_alias(task):
                    raise ConfigValidationError(
                        [
                            f"task.kind: config declares {declared.value}, "
                            f"--task is {task}"
                        ]
                    )
            return tree
        if not task:
            raise click.UsageError("Provide --task or --config")
        return preset_config(TASK_DEFAULT_PRESET[TaskKind.from_alias(task)])

    def _show_success_output(summary: TrainingSummary) -> None:
        click.echo("\n=== Training Results ===")
        click.echo(f"Config hash: {summary.config_hash}")
        click.echo(f"Steps: {summary.steps}")
        click.echo(f"Loss: {summary.initial_loss:.5f} -> {summary.final_loss:.5f}")
        if summary.duration is not None:
            click.echo(f"Duration: {summary.duration:.1f}s")
        click.echo(f"Checkpoint: {summary.checkpoint_path}")
        click.echo(f"   sha256: {summary.checkpoint_sha256}")
        click.echo(f"Metrics: {summary.metrics_path}")
        if summary.unconverged_steps:
            click.echo(
                click.style("WARNING:", fg="yellow", bold=True)
                + f" Latent divergence did not converge on "
                f"{summary.unconverged_steps} step(s)"
            )

    logger = get_logger(__name__)

    try:
        source = config_path or f"preset:{task}"
        tree = apply_overrides(_load_tree(), seed=seed, output_dir=out)
        config = parse_run_config(tree, source=source)
        logger.info(f"Starting training of {config.run_label} from {source}")

        request = TrainingRequest(
            config=config, resume_from=Path(resume) if resume else None
        )
        summary = TrainingUseCase(logger, max_workers=max_workers).execute(request)
        _show_success_output(summary)
    except click.UsageError:
        raise
    except Exception as e:
        show_error_output(e, logger, "Training")
