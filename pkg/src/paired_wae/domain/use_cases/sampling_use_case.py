"""Sampling use case: conditional samples and the sigma ladder of one input."""

import logging
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np
import torch

from ..entities.run import PlotRequest, RunConfig, SamplingRequest, SamplingResult
from ..exceptions import ConfigurationError
from .plot_use_case import PlotUseCase
from ...infrastructure.array_store import ARRAY_SUFFIX, read_array, write_array
from ...infrastructure.checkpoint_store import load_checkpoint
from ...infrastructure.conditional_sampler import ConditionalSampler
from ...infrastructure.latent_prior import random_axis
from ...infrastructure.logger import get_logger
from ...infrastructure.tasks import build_datasets


class SamplingUseCase:
    """Use case for drawing conditional samples from a checkpoint."""

    def __init__(self, logger: Optional[logging.Logger] = None) -> None:
        """
        Initialize the sampling use case.

        Args:
            logger: Logger instance. If None, will create a default logger.
        """
        self._logger = logger or get_logger(__name__)

    def execute(self, request: SamplingRequest) -> SamplingResult:
        """
        Sample X1 | X2 = condition (or X2 | X1 with ``reverse``) and write
        the condition, point estimate, sigma ladder, samples, mean and std as
        arrays plus a figure.

        ``request.condition`` is either a test-set index or the path of an
        array file holding one sample.

        Raises:
            UntrainedModelError: If the checkpoint has no training steps
        """
        loaded = load_checkpoint(request.checkpoint_path)
        config, model = loaded.config, loaded.model
        sampler = ConditionalSampler(model)
        config_hash = config.config_hash

        condition, truth, label = self._resolve_condition(
            request.condition, config, request.reverse
        )
        output_dir = request.output_dir or (
            config.output_dir / "samples" / f"condition_{label}"
        )
        self._logger.info(
            f"Sampling {request.n} draws for condition {label} "
            f"({'X2 | X1' if request.reverse else 'X1 | X2'}) into {output_dir}"
        )

        arrays: Dict[str, torch.Tensor] = {"condition": condition}
        if truth is not None:
            arrays["truth"] = truth

        axis_index: Optional[int] = None
        dead = False
        if request.reverse:
            arrays["point_estimate"] = sampler.point_estimate_reverse(condition)
            arrays["samples"] = sampler.sample_conditional_reverse(
                condition, request.n, request.seed
            )
            arrays["mean"], arrays["std"] = sampler.conditional_moments_reverse(
                condition, request.n, request.seed
            )
        else:
            arrays["point_estimate"] = sampler.point_estimate(condition)
            if sampler.split.d1 > 0:
                axis_index = (
                    request.axis_index
                    if request.axis_index is not None
                    else random_axis(sampler.split, request.seed)
                )
                ladder = sampler.perturbed_estimates(
                    condition, request.sigmas, axis_index
                )
                arrays["ladder"] = torch.stack(ladder)
                dead = sampler.diagnose_private_block(condition)
            arrays["samples"] = sampler.sample_conditional(
                condition, request.n, request.seed
            )
            arrays["mean"], arrays["std"] = sampler.conditional_moments(
                condition, request.n, request.seed
            )

        direction = "reverse" if request.reverse else "forward"
        paths = []
        for role, tensor in arrays.items():
            attributes = {"role": role, "condition": label, "direction": direction}
            if role == "ladder":
                attributes.update(
                    {"sigmas": list(request.sigmas), "axis_index": axis_index}
                )
            paths.append(
                write_array(
                    output_dir / f"{role}{ARRAY_SUFFIX}",
                    tensor.detach().cpu().numpy(),
                    config_hash,
                    seed=request.seed,
                    attributes=attributes,
                )
            )

        plot = PlotUseCase(self._logger).execute(PlotRequest(samples_dir=output_dir))
        return SamplingResult(
            config_hash=config_hash,
            output_dir=output_dir,
            grid_path=plot.output_path,
            array_paths=paths,
            axis_index=axis_index,
            dead_private_block=dead,
        )

    def _resolve_condition(
        self, condition: str, config: RunConfig, reverse: bool
    ) -> Tuple[torch.Tensor, Optional[torch.Tensor], str]:
        """Conditioning sample, its known counterpart (if any) and a label."""
        if condition.strip().isdigit():
            index = int(condition)
            data = build_datasets(
                config.task, config.train.seed, config.model.data_shape
            )
            if index >= data.n_test:
                raise ValueError(
                    f"Condition index {index} outside the {data.n_test} test samples"
                )
            if reverse:
                given, other = data.test_x1, data.test_x2
            else:
                given, other = data.test_x2, data.test_x1
            truth = torch.from_numpy(np.asarray(other[index], dtype=np.float32))
            return (
                torch.from_numpy(np.asarray(given[index], dtype=np.float32)),
                truth if data.paired else None,
                f"test{index:05d}",
            )

        path = Path(condition)
        if not path.exists():
            raise ValueError(
                f"Condition must be a test index or an array file, got '{condition}'"
            )
        stored = read_array(path)
        expected = config.model.data_shape if reverse else config.model.x2_shape
        data = stored.data
        if tuple(data.shape) == (1,) + tuple(expected):
            data = data[0]
        if tuple(data.shape) != tuple(expected):
            raise ConfigurationError(
                f"{path} holds shape {data.shape}, the model conditions on {expected}"
            )
        return torch.from_numpy(np.asarray(data, dtype=np.float32)), None, path.stem
