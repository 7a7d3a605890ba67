"""Evaluation use case: task-appropriate metrics of a trained checkpoint."""

import json
import logging
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import torch

from ..entities.run import EvaluationReport, EvaluationRequest, RunConfig
from ..entities.tasks import DataSource, TaskKind
from ..exceptions import MixedConfigHashError
from ...infrastructure.checkpoint_store import file_sha256, load_checkpoint
from ...infrastructure.conditional_sampler import ConditionalSampler
from ...infrastructure.config_loader import load_run_config
from ...infrastructure.divergences import gaussian_w2_squared
from ...infrastructure.evaluation_metrics import (
    CROSS_BLOCK_CORRELATION_MAX,
    DIRECTION_TOLERANCE_DEGREES,
    INPAINTING_FLOOR_FACTOR,
    LATENT_FLOOR_FACTOR,
    LINEAR_GAUSSIAN_W2_THRESHOLD,
    POINT_ESTIMATE_THRESHOLD,
    PSNR_GAIN_DB,
    SAME_DISTRIBUTION_FLOOR,
    STD_RELATIVE_TOLERANCE,
    TRANSPORT_COST_TOLERANCE,
    cross_block_correlation,
    cycle_error,
    displacement_angle,
    latent_match,
    masked_residual,
    psnr,
    relative_std_error,
    std_coverage,
    transport_cost,
    w2_distance,
)
from ...infrastructure.latent_prior import sample_prior
from ...infrastructure.logger import get_logger
from ...infrastructure.metrics_writer import metrics_config_hash
from ...infrastructure.networks import PairedModel, inference_mode
from ...infrastructure.objective import task_mask
from ...infrastructure.tasks import (
    DatasetBundle,
    build_datasets,
    linear_gaussian_posterior,
    monge_map_for,
)

# Fraction of pixels whose conditional std must be positive
STD_COVERAGE_MIN = 0.5
CYCLE_ERROR_MAX = 0.1


def _seeds(seed: int, index: int, count: int) -> List[int]:
    state = np.random.SeedSequence([seed, index]).generate_state(count)
    return [int(s) for s in state]


class EvaluationUseCase:
    """Use case for computing the evaluation report of one checkpoint."""

    REPORT_NAME = "evaluation.json"

    def __init__(self, logger: Optional[logging.Logger] = None) -> None:
        """
        Initialize the evaluation use case.

        Args:
            logger: Logger instance. If None, will create a default logger.
        """
        self._logger = logger or get_logger(__name__)

    def execute(self, request: EvaluationRequest) -> EvaluationReport:
        """
        Evaluate a checkpoint on the held-out split of its task.

        Raises:
            MixedConfigHashError: If a supplied config or metrics file belongs
                to a different configuration than the checkpoint
            UntrainedModelError: If the checkpoint has no training steps
        """
        loaded = load_checkpoint(request.checkpoint_path)
        config, model = loaded.config, loaded.model
        config_hash = config.config_hash
        self._check_provenance(request, config_hash)

        sampler = ConditionalSampler(model)
        data = build_datasets(config.task, config.train.seed, config.model.data_shape)
        self._logger.info(
            f"Evaluating {config.task.label} checkpoint {request.checkpoint_path} "
            f"(config {config_hash[:12]}, {model.steps} steps)"
        )

        metrics: Dict[str, float] = {"training_steps": float(model.steps)}
        checks: Dict[str, bool] = {}
        self._latent_metrics(model, data, config, request.seed, metrics, checks)

        task = config.task
        if task.kind == TaskKind.TRANSLATION:
            self._translation_metrics(sampler, data, config, request, metrics, checks)
        elif task.source == DataSource.LINEAR_GAUSSIAN:
            if request.use_oracle:
                self._posterior_metrics(
                    sampler, data, config, request.seed, metrics, checks
                )
        else:
            self._image_metrics(sampler, data, config, request.seed, metrics, checks)

        report = EvaluationReport(
            config_hash=config_hash,
            task=task.label,
            metrics=metrics,
            checks=checks,
        )
        report.output_path = self._write_report(report, request)
        failed = [name for name, passed in sorted(checks.items()) if not passed]
        if failed:
            self._logger.warning(f"Failed checks: {', '.join(failed)}")
        self._logger.info(
            f"Report written to {report.output_path} "
            f"({len(checks) - len(failed)}/{len(checks)} checks passed)"
        )
        return report

    def _check_provenance(self, request: EvaluationRequest, config_hash: str) -> None:
        if request.config_path is not None:
            other = load_run_config(request.config_path).config_hash
            if other != config_hash:
                raise MixedConfigHashError(
                    f"Config {request.config_path} hashes to {other[:12]}, "
                    f"checkpoint was trained under {config_hash[:12]}"
                )
        metrics_path = request.metrics_path
        if metrics_path is None:
            sibling = request.checkpoint_path.parent / "metrics.csv"
            metrics_path = sibling if sibling.exists() else None
        if metrics_path is not None:
            other_hash = metrics_config_hash(metrics_path)
            if other_hash is not None and other_hash != config_hash:
                raise MixedConfigHashError(
                    f"Metrics {metrics_path} belong to config {other_hash[:12]}, "
                    f"checkpoint was trained under {config_hash[:12]}"
                )

    def _latent_metrics(
        self,
        model: PairedModel,
        data: DatasetBundle,
        config: RunConfig,
        seed: int,
        metrics: Dict[str, float],
        checks: Dict[str, bool],
    ) -> None:
        """Encoded test codes against the prior, and independence of the blocks."""
        split = model.split
        n = min(config.evaluation.latent_sample_size, data.n_test)
        x1 = torch.from_numpy(np.asarray(data.test_x1[:n], dtype=np.float32))
        x2 = torch.from_numpy(np.asarray(data.test_x2[:n], dtype=np.float32))
        with inference_mode(model), torch.no_grad():
            z1, z2_from_x1 = model.encode1(x1)
            z2_from_x2, z3 = model.encode2(x2)

        prior = sample_prior(split, n, _seeds(seed, 0, 1)[0])
        reference = sample_prior(split, n, _seeds(seed, 1, 1)[0])
        codes1 = torch.cat([z1, z2_from_x1], dim=1)
        codes2 = torch.cat([z2_from_x2, z3], dim=1)
        pairs = {
            "encoder1": (codes1, prior.first(), reference.first()),
            "encoder2": (codes2, prior.second(), reference.second()),
        }
        for name, (codes, prior_block, reference_block) in pairs.items():
            match = latent_match(codes, prior_block)
            floor = latent_match(reference_block, prior_block)
            metrics[f"latent_match_{name}"] = match
            metrics[f"latent_floor_{name}"] = floor
            threshold = LATENT_FLOOR_FACTOR * max(floor, SAME_DISTRIBUTION_FLOOR)
            checks[f"latent_match_{name}"] = match <= threshold

        correlations = []
        if split.d1 > 0:
            correlations.append(cross_block_correlation(z1, z2_from_x1))
        if split.d3 > 0:
            correlations.append(cross_block_correlation(z2_from_x2, z3))
        if correlations:
            metrics["cross_block_correlation"] = max(correlations)
            checks["cross_block_correlation"] = (
                max(correlations) <= CROSS_BLOCK_CORRELATION_MAX
            )

    def _posterior_metrics(
        self,
        sampler: ConditionalSampler,
        data: DatasetBundle,
        config: RunConfig,
        seed: int,
        metrics: Dict[str, float],
        checks: Dict[str, bool],
    ) -> None:
        """Conditional samples against the analytic linear-Gaussian posterior."""
        oracle = config.task.linear_gaussian
        assert oracle is not None
        n = config.evaluation.n_samples
        w2s, point_errors, std_errors = [], [], []
        for index in range(min(config.evaluation.n_conditions, data.n_test)):
            x2 = np.asarray(data.test_x2[index], dtype=np.float32)
            posterior = linear_gaussian_posterior(oracle, x2.astype(np.float64))
            model_seed, oracle_seed = _seeds(seed, 100 + index, 2)
            samples = sampler.sample_conditional(torch.from_numpy(x2), n, model_seed)
            reference = posterior.sample(n, oracle_seed)
            w2s.append(w2_distance(samples, reference))

            estimate = sampler.point_estimate(torch.from_numpy(x2)).numpy()
            point_errors.append(float(np.linalg.norm(estimate - posterior.mean)))
            std = samples.std(dim=0).numpy()
            std_errors.append(relative_std_error(std, posterior.std))

        metrics["w2_to_posterior"] = float(np.mean(w2s))
        metrics["w2_to_posterior_max"] = float(np.max(w2s))
        metrics["point_estimate_error"] = float(np.max(point_errors))
        metrics["posterior_std_relative_error"] = float(np.max(std_errors))
        checks["w2_to_posterior"] = max(w2s) <= LINEAR_GAUSSIAN_W2_THRESHOLD
        checks["point_estimate_error"] = max(point_errors) <= POINT_ESTIMATE_THRESHOLD
        checks["posterior_std"] = max(std_errors) <= STD_RELATIVE_TOLERANCE

    def _image_metrics(
        self,
        sampler: ConditionalSampler,
        data: DatasetBundle,
        config: RunConfig,
        seed: int,
        metrics: Dict[str, float],
        checks: Dict[str, bool],
    ) -> None:
        """PSNR gain of point estimates, uncertainty coverage and, for inpainting,
        consistency with the observed pixels."""
        count = min(config.evaluation.n_test_images, data.n_test)
        truth = np.asarray(data.test_x1[:count], dtype=np.float32)
        observed = np.asarray(data.test_x2[:count], dtype=np.float32)
        estimates = np.stack(
            [sampler.point_estimate(torch.from_numpy(x)).numpy() for x in observed]
        )
        metrics["psnr_point_estimate"] = psnr(truth, estimates)
        metrics["psnr_observation"] = psnr(truth, observed)
        gain = metrics["psnr_point_estimate"] - metrics["psnr_observation"]
        metrics["psnr_gain_db"] = gain

        coverages = []
        for index in range(min(config.evaluation.n_conditions, count)):
            _, std = sampler.conditional_moments(
                torch.from_numpy(observed[index]),
                config.evaluation.n_samples,
                _seeds(seed, 200 + index, 1)[0],
            )
            coverages.append(std_coverage(std))
        metrics["std_positive_fraction"] = float(np.mean(coverages))
        checks["std_positive_fraction"] = (
            metrics["std_positive_fraction"] >= STD_COVERAGE_MIN
        )

        if config.task.kind == TaskKind.INPAINTING:
            mask = task_mask(config.task, tuple(truth.shape[1:]))
            predictions = np.stack(
                [
                    sampler.point_estimate_reverse(torch.from_numpy(x)).numpy()
                    for x in truth
                ]
            )
            residual = masked_residual(mask, observed, predictions)
            assert config.task.noise_std is not None
            metrics["masked_residual"] = residual
            checks["masked_residual"] = (
                residual <= INPAINTING_FLOOR_FACTOR * config.task.noise_std
            )
        else:
            checks["psnr_gain"] = gain >= PSNR_GAIN_DB

    def _translation_metrics(
        self,
        sampler: ConditionalSampler,
        data: DatasetBundle,
        config: RunConfig,
        request: EvaluationRequest,
        metrics: Dict[str, float],
        checks: Dict[str, bool],
    ) -> None:
        """Transport cost, direction and cycle consistency of the learned maps."""
        n = min(config.evaluation.n_samples, data.n_test)
        x1 = torch.from_numpy(np.asarray(data.test_x1[:n], dtype=np.float32))
        x2 = np.asarray(data.test_x2[:n], dtype=np.float32)
        mapped = sampler.translate(x1)
        cycled = sampler.translate_inverse(mapped)
        reconstructed = sampler.reconstruct_x1(x1)

        metrics["transport_cost"] = transport_cost(x1, mapped)
        metrics["cycle_error"] = cycle_error(x1, cycled, reconstructed)
        metrics["w2_translated_to_target"] = w2_distance(mapped, x2)

        pair = config.task.gaussian_pair
        if pair is None or not request.use_oracle:
            return
        oracle = monge_map_for(pair)
        w2_squared = gaussian_w2_squared(pair.mean1, pair.cov1, pair.mean2, pair.cov2)
        relative = abs(metrics["transport_cost"] - w2_squared) / max(w2_squared, 1e-12)
        source = x1.numpy().astype(np.float64)
        angle = displacement_angle(source, mapped, oracle(source))
        metrics["oracle_w2_squared"] = w2_squared
        metrics["transport_cost_relative_error"] = relative
        metrics["displacement_angle_degrees"] = angle
        checks["transport_cost"] = relative <= TRANSPORT_COST_TOLERANCE
        checks["displacement_direction"] = angle <= DIRECTION_TOLERANCE_DEGREES
        checks["cycle_error"] = metrics["cycle_error"] <= CYCLE_ERROR_MAX

    def _write_report(
        self, report: EvaluationReport, request: EvaluationRequest
    ) -> Path:
        path = request.output_path or request.checkpoint_path.parent / self.REPORT_NAME
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = report.to_dict()
        payload["checkpoint_sha256"] = file_sha256(request.checkpoint_path)
        payload["all_checks_passed"] = report.all_checks_passed
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=2, sort_keys=True)
            f.write("\n")
        return path
