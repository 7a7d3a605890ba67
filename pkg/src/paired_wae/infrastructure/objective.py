"""Training loss: reconstruction, latent divergence and data fidelity."""

from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np
import torch

from ..domain.entities.latent import LatentCode
from ..domain.entities.measures import DivergenceResult, EmpiricalMeasure
from ..domain.entities.tasks import TaskKind, TaskSpec
from ..domain.entities.training import DivergenceSettings, TrainConfig
from ..domain.exceptions import ConfigurationError, ShapeMismatchError
from .divergences import compute_divergence
from .latent_prior import prior_for_step
from .networks import PairedModel
from .tasks import left_half_mask

# Independent prior streams drawn each step
DIVERGENCE_STREAM = 0
FIDELITY_STREAM = 1


@dataclass(frozen=True)
class PairedBatch:
    """
    A mini-batch of X1 and X2 samples.

    ``paired`` marks joint samples (row i of x1 and of x2 belong together);
    translation batches are two independent marginal batches.
    """

    x1: torch.Tensor
    x2: torch.Tensor
    paired: bool = True

    def __post_init__(self) -> None:
        if self.x1.shape[0] < 1:
            raise ValueError("Batch must not be empty")
        if self.x1.shape[0] != self.x2.shape[0]:
            raise ShapeMismatchError(
                f"x1 and x2 batches differ in size: {self.x1.shape[0]} vs "
                f"{self.x2.shape[0]}"
            )

    @property
    def size(self) -> int:
        return int(self.x1.shape[0])


@dataclass
class LossBreakdown:
    """Total loss and its unweighted terms."""

    total: torch.Tensor
    reconstruction: float
    divergence: float
    fidelity: float
    lambda1: float
    lambda2: float
    divergence_converged: bool = True
    divergence_message: Optional[str] = None

    @property
    def weighted_divergence(self) -> float:
        return self.lambda1 * self.divergence

    @property
    def weighted_fidelity(self) -> float:
        return self.lambda2 * self.fidelity

    def as_dict(self) -> Dict[str, float]:
        return {
            "total": float(self.total.detach()),
            "recon": self.reconstruction,
            "div": self.divergence,
            "fidelity": self.fidelity,
        }


def _per_sample_mean(values: torch.Tensor) -> torch.Tensor:
    """Mean over every axis but the batch axis."""
    return values.reshape(values.shape[0], -1).mean(dim=1)


def _check_shapes(x: torch.Tensor, y: torch.Tensor) -> None:
    if x.shape != y.shape:
        raise ShapeMismatchError(
            f"Cannot compare shapes {tuple(x.shape)} and {tuple(y.shape)}"
        )


def _l1(x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
    _check_shapes(x, y)
    return _per_sample_mean((x - y).abs()).mean()


def _squared(x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
    _check_shapes(x, y)
    return _per_sample_mean((x - y) ** 2).mean()


def reconstruction_term(model: PairedModel, batch: PairedBatch) -> torch.Tensor:
    """
    Mean L1 autoencoder error of both modalities.

    Each image contributes its mean absolute per-entry error; the result is
    the batch mean of ||x1 - D1(E1(x1))|| plus that of ||x2 - D2(E2(x2))||.
    Only marginal samples are needed.
    """
    x1_hat = model.decode1(*model.encode1(batch.x1))
    x2_hat = model.decode2(*model.encode2(batch.x2))
    return _l1(batch.x1, x1_hat) + _l1(batch.x2, x2_hat)


def latent_divergence_term(
    model: PairedModel,
    batch: PairedBatch,
    prior: LatentCode,
    settings: DivergenceSettings,
    seed: int = 0,
) -> DivergenceResult:
    """
    Div(E1(x1), (z1, z2)) + Div(E2(x2), (z2, z3)) against a prior sample.

    Non-convergence of an iterative divergence is reported in the result.
    """
    model.split.check(prior)
    if batch.size < 2 or len(prior) < 2:
        raise ValueError("Latent divergence needs at least two samples per measure")
    codes1 = torch.cat(model.encode1(batch.x1), dim=1)
    codes2 = torch.cat(model.encode2(batch.x2), dim=1)
    prior1 = prior.first().to(codes1.dtype)
    prior2 = prior.second().to(codes2.dtype)
    uniform = EmpiricalMeasure.uniform
    first = compute_divergence(uniform(codes1), uniform(prior1), settings, seed)
    second = compute_divergence(uniform(codes2), uniform(prior2), settings, seed)
    return first + second


def data_fidelity_denoising(
    model: PairedModel,
    batch: PairedBatch,
    z1_sample: torch.Tensor,
    z3_sample: torch.Tensor,
) -> torch.Tensor:
    """
    Squared cross-reconstruction error of joint samples:
    ||x1 - D1(z1, E2(x2)_z2)||^2 + ||x2 - D2(E1(x1)_z2, z3)||^2,
    averaged per entry and over the batch.
    """
    if not batch.paired:
        raise ConfigurationError("Denoising data fidelity needs paired samples")
    x1_hat = model.cross_reconstruct_x1(z1_sample.to(batch.x2.dtype), batch.x2)
    x2_hat = model.cross_reconstruct_x2(batch.x1, z3_sample.to(batch.x1.dtype))
    return _squared(batch.x1, x1_hat) + _squared(batch.x2, x2_hat)


def data_fidelity_inpainting(
    model: PairedModel,
    batch: PairedBatch,
    mask: torch.Tensor,
    z1_sample: torch.Tensor,
    z3_sample: torch.Tensor,
) -> torch.Tensor:
    """
    Masked L1 cross-reconstruction error:
    ||M * x1 - M * D1(z1, E2(x2)_z2)||_1 + ||M * x2 - M * D2(E1(x1)_z2, z3)||_1.
    """
    if not batch.paired:
        raise ConfigurationError("Inpainting data fidelity needs paired samples")
    if tuple(mask.shape) != tuple(batch.x1.shape[1:]) or tuple(mask.shape) != tuple(
        batch.x2.shape[1:]
    ):
        raise ShapeMismatchError(
            f"Mask shape {tuple(mask.shape)} does not match the sample shape "
            f"{tuple(batch.x1.shape[1:])}"
        )
    mask = mask.to(batch.x1.dtype)
    x1_hat = model.cross_reconstruct_x1(z1_sample.to(batch.x2.dtype), batch.x2)
    x2_hat = model.cross_reconstruct_x2(batch.x1, z3_sample.to(batch.x1.dtype))
    return _l1(mask * batch.x1, mask * x1_hat) + _l1(mask * batch.x2, mask * x2_hat)


def data_fidelity_translation(model: PairedModel, batch: PairedBatch) -> torch.Tensor:
    """
    Squared transport cost of the learned maps, averaged over both directions:
    (E||x1 - T(x1)||^2 + E||x2 - T^-1(x2)||^2) / 2.

    Norms are summed over coordinates, so at the Monge map of two Gaussians
    the value equals their squared W2 distance.

    Raises:
        ConfigurationError: If the split has private blocks
    """
    if not model.split.is_translation:
        raise ConfigurationError(
            f"Translation fidelity needs the split (0, d2, 0), got "
            f"{model.split.as_tuple()}"
        )
    forward = model.translate(batch.x1)
    backward = model.translate_inverse(batch.x2)
    if forward.shape != batch.x1.shape or backward.shape != batch.x2.shape:
        raise ShapeMismatchError("Translation needs X1 and X2 of one shape")
    cost1 = ((batch.x1 - forward) ** 2).reshape(batch.size, -1).sum(dim=1).mean()
    cost2 = ((batch.x2 - backward) ** 2).reshape(batch.size, -1).sum(dim=1).mean()
    return 0.5 * (cost1 + cost2)


def task_mask(task: TaskSpec, shape: tuple) -> np.ndarray:
    """The task's inpainting mask, the left-half mask when none is given."""
    if task.mask is not None:
        return np.asarray(task.mask, dtype=np.float32)
    return left_half_mask(shape)


def total_loss(
    model: PairedModel,
    batch: PairedBatch,
    config: TrainConfig,
    task: TaskSpec,
    step: int = 0,
    prior: Optional[LatentCode] = None,
    fidelity_prior: Optional[LatentCode] = None,
) -> LossBreakdown:
    """
    recon + lambda1 * divergence + lambda2 * R_d for the task's R_d.

    Prior draws default to the step-indexed streams of ``config.seed`` so the
    loss is a deterministic function of (theta, batch, seed, step).
    """
    split = model.split
    dtype = batch.x1.dtype
    if prior is None:
        prior = prior_for_step(split, batch.size, config.seed, step, DIVERGENCE_STREAM)

    recon = reconstruction_term(model, batch)
    zero = recon.new_zeros(())

    if config.lambda1 > 0:
        divergence = latent_divergence_term(
            model, batch, prior, config.divergence, seed=config.seed + step
        )
    else:
        divergence = DivergenceResult(value=zero)

    if config.lambda2 > 0:
        if task.kind == TaskKind.TRANSLATION:
            fidelity = data_fidelity_translation(model, batch)
        else:
            if fidelity_prior is None:
                fidelity_prior = prior_for_step(
                    split, batch.size, config.seed, step, FIDELITY_STREAM
                )
            z1 = fidelity_prior.z1.to(dtype)
            z3 = fidelity_prior.z3.to(dtype)
            if task.kind == TaskKind.INPAINTING:
                mask = torch.from_numpy(task_mask(task, tuple(batch.x1.shape[1:])))
                fidelity = data_fidelity_inpainting(model, batch, mask, z1, z3)
            else:
                fidelity = data_fidelity_denoising(model, batch, z1, z3)
    else:
        fidelity = zero

    total = recon + config.lambda1 * divergence.value + config.lambda2 * fidelity
    return LossBreakdown(
        total=total,
        reconstruction=float(recon.detach()),
        divergence=divergence.item(),
        fidelity=float(fidelity.detach()),
        lambda1=config.lambda1,
        lambda2=config.lambda2,
        divergence_converged=divergence.converged,
        divergence_message=divergence.message,
    )
