"""Empirical measures and divergence result entities."""

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import torch

WEIGHT_SUM_TOLERANCE = 1e-9


class DivergenceKind(Enum):
    """Latent divergences selectable for Div(., .)."""

    SINKHORN = "sinkhorn"
    SLICED = "sliced"
    MMD = "mmd"


@dataclass(frozen=True)
class EmpiricalMeasure:
    """
    A finite weighted point set in R^d.

    Attributes:
        points: Tensor of shape (n, d)
        weights: Float64 tensor of shape (n,) summing to one
    """

    points: torch.Tensor
    weights: torch.Tensor

    def __post_init__(self) -> None:
        """Validate the point set and its weights."""
        if self.points.dim() != 2:
            raise ValueError(
                f"Points must have shape (n, d), got {tuple(self.points.shape)}"
            )
        n, d = self.points.shape
        if n < 1:
            raise ValueError("Empirical measure must contain at least one point")
        if d < 1:
            raise ValueError("Points must have dimension d >= 1")
        if self.weights.shape != (n,):
            raise ValueError(
                f"Weights shape {tuple(self.weights.shape)} does not match "
                f"{n} points"
            )
        weights = self.weights.detach().to(torch.float64)
        if bool((weights < 0).any()):
            raise ValueError("Weights must be nonnegative")
        total = float(weights.sum())
        if abs(total - 1.0) > WEIGHT_SUM_TOLERANCE:
            raise ValueError(f"Weights must sum to 1, got {total!r}")

    @classmethod
    def uniform(cls, points: torch.Tensor) -> "EmpiricalMeasure":
        """Build the measure sum_i (1/n) delta_{x_i}."""
        if points.dim() == 1:
            points = points.unsqueeze(-1)
        n = points.shape[0]
        if n < 1:
            raise ValueError("Empirical measure must contain at least one point")
        weights = torch.full((n,), 1.0 / n, dtype=torch.float64)
        return cls(points=points, weights=weights)

    @property
    def size(self) -> int:
        """Number of support points."""
        return int(self.points.shape[0])

    @property
    def dim(self) -> int:
        """Dimension of the ambient space."""
        return int(self.points.shape[1])

    @property
    def is_uniform(self) -> bool:
        """Whether all points carry the weight 1/n."""
        expected = torch.full_like(self.weights, 1.0 / self.size, dtype=torch.float64)
        return bool(
            torch.allclose(
                self.weights.to(torch.float64), expected, rtol=0.0, atol=1e-12
            )
        )

    def weights_like_points(self) -> torch.Tensor:
        """Weights cast to the dtype and device of the points."""
        return self.weights.to(dtype=self.points.dtype, device=self.points.device)


@dataclass(frozen=True)
class CostMatrix:
    """Pairwise costs ||x_i - y_j||_p^p between two point sets."""

    entries: torch.Tensor
    p: float

    def __post_init__(self) -> None:
        """Validate the matrix."""
        if self.entries.dim() != 2:
            raise ValueError("Cost matrix must be two-dimensional")
        if bool((self.entries.detach() < 0).any()):
            raise ValueError("Cost matrix entries must be nonnegative")

    @property
    def mean(self) -> float:
        """Mean cost, used to express entropic regularization scale-free."""
        return float(self.entries.detach().mean())


@dataclass
class DivergenceResult:
    """
    Value of a divergence between two empirical measures.

    Iterative solvers report convergence instead of raising; the value is
    the last iterate when ``converged`` is False.
    """

    value: torch.Tensor
    converged: bool = True
    iterations: int = 0
    marginal_error: float = 0.0
    message: Optional[str] = None

    def __add__(self, other: "DivergenceResult") -> "DivergenceResult":
        return DivergenceResult(
            value=self.value + other.value,
            converged=self.converged and other.converged,
            iterations=max(self.iterations, other.iterations),
            marginal_error=max(self.marginal_error, other.marginal_error),
            message=self.message or other.message,
        )

    def item(self) -> float:
        """Detached float value."""
        return float(self.value.detach())
