"""Training use case: optimizes a paired model on one task."""

import logging
import math
import time
from datetime import datetime
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
import torch

from ..entities.run import RunConfig, TrainingRequest, TrainingSummary
from ..exceptions import MixedConfigHashError
from ...infrastructure.checkpoint_store import (
    CheckpointInfo,
    load_checkpoint,
    save_checkpoint,
)
from ...infrastructure.config_loader import save_run_config
from ...infrastructure.logger import clear_run_context, get_logger, set_run_context
from ...infrastructure.metrics_writer import MetricsWriter
from ...infrastructure.networks import PairedModel, build_model
from ...infrastructure.objective import LossBreakdown, PairedBatch, total_loss
from ...infrastructure.tasks import DatasetBundle, build_datasets

# Prior streams 0 and 1 are taken by the loss
BATCH_STREAM = 2


def batch_indices(
    n: int, batch_size: int, seed: int, step: int, paired: bool
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Row indices of the X1 and X2 mini-batches of one step.

    Paired tasks share one index set; translation draws the two marginals
    independently.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, step, BATCH_STREAM]))
    first = rng.choice(n, size=batch_size, replace=False)
    second = first if paired else rng.choice(n, size=batch_size, replace=False)
    return first, second


class TrainingUseCase:
    """Use case for training a paired model and writing its artifacts."""

    CHECKPOINT_NAME = "checkpoint.zip"
    METRICS_NAME = "metrics.csv"
    CONFIG_NAME = "config.json"

    def __init__(
        self, logger: Optional[logging.Logger] = None, max_workers: Optional[int] = None
    ) -> None:
        """
        Initialize the training use case.

        Args:
            logger: Logger instance. If None, will create a default logger.
            max_workers: Worker processes for dataset generation (adaptive if None)
        """
        self._logger = logger or get_logger(__name__)
        self._max_workers = max_workers

    def execute(self, request: TrainingRequest) -> TrainingSummary:
        """
        Train for ``config.train.iterations`` steps.

        Writes the effective config, the metrics CSV, intermediate checkpoints
        every ``checkpoint_every`` steps and the final checkpoint into
        ``config.output_dir``.

        Raises:
            MixedConfigHashError: If the resumed checkpoint or the existing
                metrics file belong to a different configuration
        """
        config = request.config
        set_run_context(config.run_label)
        try:
            return self._train(config, request.resume_from)
        finally:
            clear_run_context()

    def _train(self, config: RunConfig, resume_from: Optional[Path]) -> TrainingSummary:
        start_time = datetime.now()
        output_dir = config.output_dir
        output_dir.mkdir(parents=True, exist_ok=True)
        config_hash = config.config_hash
        self._logger.info(
            f"Training {config.task.label} with split {config.latent.as_tuple()} "
            f"(config {config_hash[:12]}) into {output_dir}"
        )
        save_run_config(config, output_dir / self.CONFIG_NAME)

        data = build_datasets(
            config.task, config.train.seed, config.model.data_shape, self._max_workers
        )
        model = build_model(config.model, config.latent, seed=config.train.seed)
        if resume_from is not None:
            model = self._resume(model, resume_from, config_hash)

        writer = MetricsWriter(
            output_dir / self.METRICS_NAME, config_hash, append=resume_from is not None
        )
        optimizer = torch.optim.Adam(model.parameters(), lr=config.train.learning_rate)
        train_x1 = torch.from_numpy(np.asarray(data.train_x1, dtype=np.float32))
        train_x2 = torch.from_numpy(np.asarray(data.train_x2, dtype=np.float32))

        initial_loss: Optional[float] = None
        final_loss = math.nan
        unconverged = 0
        clock = time.perf_counter()
        model.train()
        for step in range(model.steps, config.train.iterations):
            losses = self._step(
                model, optimizer, data, train_x1, train_x2, config, step
            )
            model.steps = step + 1
            wall_clock = time.perf_counter() - clock
            writer.log_step(step, losses, wall_clock)

            loss_value = float(losses.total.detach())
            initial_loss = loss_value if initial_loss is None else initial_loss
            final_loss = loss_value
            if not losses.divergence_converged:
                unconverged += 1
            self._log_step(step, losses, config.train.log_every)

            every = config.train.checkpoint_every
            due = bool(every) and model.steps % every == 0
            if due and model.steps < config.train.iterations:
                path = output_dir / f"checkpoint_step{model.steps:06d}.zip"
                info = save_checkpoint(model, path, config)
                writer.log_checkpoint(model.steps, info.sha256, wall_clock)

        info = self._save_final(model, config, writer, time.perf_counter() - clock)
        if unconverged:
            self._logger.warning(
                f"Latent divergence did not converge on {unconverged} of "
                f"{config.train.iterations} steps"
            )
        summary = TrainingSummary(
            config_hash=config_hash,
            checkpoint_path=info.path,
            checkpoint_sha256=info.sha256,
            metrics_path=writer.path,
            steps=model.steps,
            initial_loss=math.nan if initial_loss is None else initial_loss,
            final_loss=final_loss,
            start_time=start_time,
            end_time=datetime.now(),
            unconverged_steps=unconverged,
        )
        self._logger.info(
            f"Finished {summary.steps} steps in {summary.duration:.1f}s; "
            f"loss {summary.initial_loss:.4f} -> {summary.final_loss:.4f}"
        )
        return summary

    def _resume(self, model: PairedModel, path: Path, config_hash: str) -> PairedModel:
        loaded = load_checkpoint(path, model)
        if loaded.config_hash != config_hash:
            raise MixedConfigHashError(
                f"Checkpoint {path} was trained under config "
                f"{loaded.config_hash[:12]}, not {config_hash[:12]}"
            )
        # Adam moments are not stored, so the optimizer restarts from zero.
        self._logger.info(f"Resuming from {path} at step {loaded.model.steps}")
        return loaded.model

    def _step(
        self,
        model: PairedModel,
        optimizer: torch.optim.Optimizer,
        data: DatasetBundle,
        train_x1: torch.Tensor,
        train_x2: torch.Tensor,
        config: RunConfig,
        step: int,
    ) -> LossBreakdown:
        rows1, rows2 = batch_indices(
            data.n_train, config.train.batch_size, config.train.seed, step, data.paired
        )
        batch = PairedBatch(
            x1=train_x1[torch.from_numpy(rows1)],
            x2=train_x2[torch.from_numpy(rows2)],
            paired=data.paired,
        )
        losses = total_loss(model, batch, config.train, config.task, step=step)
        if not torch.isfinite(losses.total):
            raise FloatingPointError(
                f"Loss is not finite at step {step}: {losses.as_dict()}"
            )
        optimizer.zero_grad()
        losses.total.backward()
        optimizer.step()
        return losses

    def _log_step(self, step: int, losses: LossBreakdown, log_every: int) -> None:
        terms = losses.as_dict()
        message = (
            f"step {step + 1}: total {terms['total']:.5f} "
            f"recon {terms['recon']:.5f} "
            f"div {terms['div']:.5f} (x{losses.lambda1:g}) "
            f"fidelity {terms['fidelity']:.5f} (x{losses.lambda2:g})"
        )
        if (step + 1) % log_every == 0 or step == 0:
            self._logger.info(message)
        else:
            self._logger.debug(message)

    def _save_final(
        self,
        model: PairedModel,
        config: RunConfig,
        writer: MetricsWriter,
        wall_clock: float,
    ) -> CheckpointInfo:
        path = config.output_dir / self.CHECKPOINT_NAME
        info = save_checkpoint(model, path, config)
        writer.log_checkpoint(model.steps, info.sha256, wall_clock)
        self._logger.info(f"Checkpoint written to {path} (sha256 {info.sha256[:12]})")
        return info
