"""Conditional sampling from a trained paired model."""

from typing import List, Optional, Sequence, Tuple

import torch

from ..domain.entities.latent import LatentSplit
from ..domain.exceptions import ShapeMismatchError, UntrainedModelError
from .latent_prior import perturbation_code, sample_private
from .logger import get_logger
from .networks import PairedModel, inference_mode

DEAD_BLOCK_THRESHOLD = 1e-6


class ConditionalSampler:
    """
    Draws from X1 | X2 = x2 as D1(Z1, z2) with z2 the shared block of E2(x2)
    and Z1 ~ N(0, I), and symmetrically from X2 | X1 = x1.

    All evaluations run with normalization layers in inference mode, so
    repeated calls are bit-identical.
    """

    def __init__(self, model: PairedModel, allow_untrained: bool = False) -> None:
        """
        Args:
            model: Paired model
            allow_untrained: Accept a model with no optimization steps

        Raises:
            UntrainedModelError: If the model was never trained
        """
        if not model.is_trained and not allow_untrained:
            raise UntrainedModelError(
                "Model has no training steps; train it or load a trained checkpoint"
            )
        self.model = model
        self._logger = get_logger(__name__)

    @property
    def split(self) -> LatentSplit:
        return self.model.split

    def _as_single(
        self, x: torch.Tensor, shape: Tuple[int, ...], name: str
    ) -> torch.Tensor:
        """Accept one sample with or without a leading batch axis of 1."""
        if tuple(x.shape) == tuple(shape):
            x = x.unsqueeze(0)
        if tuple(x.shape) != (1,) + tuple(shape):
            raise ShapeMismatchError(
                f"{name} must be a single sample of shape {tuple(shape)}, "
                f"got {tuple(x.shape)}"
            )
        return x.to(self._dtype)

    @property
    def _dtype(self) -> torch.dtype:
        return next(self.model.parameters()).dtype

    def _shared_from_x2(self, x2: torch.Tensor) -> torch.Tensor:
        x2 = self._as_single(x2, self.model.spec.x2_shape, "x2")
        z2, _ = self.model.encode2(x2)
        return z2

    def _shared_from_x1(self, x1: torch.Tensor) -> torch.Tensor:
        x1 = self._as_single(x1, self.model.spec.data_shape, "x1")
        _, z2 = self.model.encode1(x1)
        return z2

    def point_estimate(self, x2: torch.Tensor) -> torch.Tensor:
        """D1(0, z2): the prior mode of Z1 pushed through the decoder."""
        with inference_mode(self.model), torch.no_grad():
            z2 = self._shared_from_x2(x2)
            z1 = z2.new_zeros(1, self.split.d1)
            return self.model.decode1(z1, z2)[0]

    def sample_conditional(self, x2: torch.Tensor, n: int, seed: int) -> torch.Tensor:
        """
        n draws D1(Z1_i, z2) with z2 computed once.

        Draw i depends only on (seed, i), so a larger n extends the sequence.
        """
        if n < 1:
            raise ValueError("n must be at least 1")
        with inference_mode(self.model), torch.no_grad():
            z2 = self._shared_from_x2(x2)
            z1 = sample_private(self.split.d1, n, seed, dtype=z2.dtype)
            return self.model.decode1(z1, z2.expand(n, -1))

    def perturbed_estimates(
        self, x2: torch.Tensor, sigmas: Sequence[float], axis_index: int
    ) -> List[torch.Tensor]:
        """D1(sigma e_axis, z2) for every sigma; sigma = 0 equals the point estimate."""
        codes = [
            perturbation_code(self.split, sigma, axis_index, dtype=self._dtype)
            for sigma in sigmas
        ]
        with inference_mode(self.model), torch.no_grad():
            z2 = self._shared_from_x2(x2)
            # One decoder call per sigma keeps each entry identical to a
            # batch-of-one evaluation such as point_estimate.
            return [self.model.decode1(code.unsqueeze(0), z2)[0] for code in codes]

    def conditional_moments(
        self, x2: torch.Tensor, n: int, seed: int
    ) -> Tuple[torch.Tensor, torch.Tensor]:
        """Monte-Carlo mean and per-entry standard deviation of X1 | X2 = x2."""
        if n < 2:
            raise ValueError("A standard deviation needs at least two samples")
        if self.split.d1 == 0:
            estimate = self.point_estimate(x2)
            return estimate, torch.zeros_like(estimate)
        samples = self.sample_conditional(x2, n, seed)
        return samples.mean(dim=0), samples.std(dim=0)

    def point_estimate_reverse(self, x1: torch.Tensor) -> torch.Tensor:
        """D2(z2, 0) with z2 the shared block of E1(x1)."""
        with inference_mode(self.model), torch.no_grad():
            z2 = self._shared_from_x1(x1)
            return self.model.decode2(z2, z2.new_zeros(1, self.split.d3))[0]

    def sample_conditional_reverse(
        self, x1: torch.Tensor, n: int, seed: int
    ) -> torch.Tensor:
        """n draws D2(z2, Z3_i) of X2 | X1 = x1."""
        if n < 1:
            raise ValueError("n must be at least 1")
        with inference_mode(self.model), torch.no_grad():
            z2 = self._shared_from_x1(x1)
            z3 = sample_private(self.split.d3, n, seed, dtype=z2.dtype)
            return self.model.decode2(z2.expand(n, -1), z3)

    def conditional_moments_reverse(
        self, x1: torch.Tensor, n: int, seed: int
    ) -> Tuple[torch.Tensor, torch.Tensor]:
        if n < 2:
            raise ValueError("A standard deviation needs at least two samples")
        if self.split.d3 == 0:
            estimate = self.point_estimate_reverse(x1)
            return estimate, torch.zeros_like(estimate)
        samples = self.sample_conditional_reverse(x1, n, seed)
        return samples.mean(dim=0), samples.std(dim=0)

    def translate(self, x1: torch.Tensor) -> torch.Tensor:
        """T(x1) = D2(E1(x1)) for a batch of X1 samples."""
        with inference_mode(self.model), torch.no_grad():
            return self.model.translate(x1.to(self._dtype))

    def translate_inverse(self, x2: torch.Tensor) -> torch.Tensor:
        """T^-1(x2) = D1(E2(x2)) for a batch of X2 samples."""
        with inference_mode(self.model), torch.no_grad():
            return self.model.translate_inverse(x2.to(self._dtype))

    def reconstruct_x1(self, x1: torch.Tensor) -> torch.Tensor:
        """D1(E1(x1)) for a batch."""
        with inference_mode(self.model), torch.no_grad():
            return self.model.decode1(*self.model.encode1(x1.to(self._dtype)))

    def diagnose_private_block(
        self, x2: torch.Tensor, sigma: float = 1.0, axes: Optional[Sequence[int]] = None
    ) -> bool:
        """
        Whether D1 ignores z1: +sigma and -sigma along every axis give outputs
        closer than DEAD_BLOCK_THRESHOLD. Logs a warning when it does.
        """
        d1 = self.split.d1
        if d1 == 0:
            return False
        axes = list(range(d1)) if axes is None else list(axes)
        largest = 0.0
        for axis in axes:
            plus, minus = self.perturbed_estimates(x2, (sigma, -sigma), axis)
            largest = max(largest, float((plus - minus).abs().max()))
        dead = largest < DEAD_BLOCK_THRESHOLD
        if dead:
            self._logger.warning(
                f"Private block z1 appears dead: perturbations of +/-{sigma} along "
                f"{len(axes)} axes change the output by at most {largest:.3e}"
            )
        return dead
