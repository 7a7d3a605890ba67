"""Training configuration entities."""

from dataclasses import dataclass, field
from typing import Any, Dict, Optional

from .measures import DivergenceKind


@dataclass(frozen=True)
class SinkhornSettings:
    """
    Debiased Sinkhorn divergence settings.

    ``epsilon`` is a fraction of the mean cost when ``relative`` is True,
    otherwise an absolute regularization strength.
    """

    epsilon: float = 0.05
    max_iters: int = 500
    tol: float = 1e-6
    relative: bool = True

    def __post_init__(self) -> None:
        if self.epsilon <= 0:
            raise ValueError("Sinkhorn epsilon must be positive")
        if self.max_iters < 1:
            raise ValueError("Sinkhorn max_iters must be at least 1")
        if self.tol <= 0:
            raise ValueError("Sinkhorn tol must be positive")


@dataclass(frozen=True)
class SlicedSettings:
    """Sliced Wasserstein settings."""

    n_projections: int = 100
    p: float = 2.0

    def __post_init__(self) -> None:
        if self.n_projections < 1:
            raise ValueError("n_projections must be at least 1")
        if self.p < 1:
            raise ValueError("p must be at least 1")


@dataclass(frozen=True)
class MmdSettings:
    """Gaussian-kernel MMD settings; no bandwidth means the median heuristic."""

    bandwidth: Optional[float] = None

    def __post_init__(self) -> None:
        if self.bandwidth is not None and self.bandwidth <= 0:
            raise ValueError("MMD bandwidth must be positive")


@dataclass(frozen=True)
class DivergenceSettings:
    """Choice of latent divergence plus the hyperparameters of every kind."""

    kind: DivergenceKind = DivergenceKind.SINKHORN
    sinkhorn: SinkhornSettings = field(default_factory=SinkhornSettings)
    sliced: SlicedSettings = field(default_factory=SlicedSettings)
    mmd: MmdSettings = field(default_factory=MmdSettings)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "sinkhorn": {
                "epsilon": self.sinkhorn.epsilon,
                "max_iters": self.sinkhorn.max_iters,
                "tol": self.sinkhorn.tol,
                "relative": self.sinkhorn.relative,
            },
            "sliced": {
                "n_projections": self.sliced.n_projections,
                "p": self.sliced.p,
            },
            "mmd": {"bandwidth": self.mmd.bandwidth},
        }


@dataclass(frozen=True)
class TrainConfig:
    """
    Loss weights, divergence choice, optimizer settings and seed.

    Attributes:
        lambda1: Weight of the latent divergence terms
        lambda2: Weight of the data-fidelity regularizer R_d
        divergence: Latent divergence and its hyperparameters
        batch_size: Mini-batch size (divergence estimators need at least 2)
        learning_rate: Adam step size
        iterations: Number of optimization steps
        seed: Seed for initialization, batching and prior draws
        log_every: Interval of INFO loss logging
        checkpoint_every: Interval of intermediate checkpoints (0 disables)
    """

    lambda1: float = 1.0
    lambda2: float = 1.0
    divergence: DivergenceSettings = field(default_factory=DivergenceSettings)
    batch_size: int = 128
    learning_rate: float = 1e-3
    iterations: int = 2000
    seed: int = 0
    log_every: int = 100
    checkpoint_every: int = 0

    def __post_init__(self) -> None:
        """Validate loss weights and batch size."""
        if self.lambda1 < 0:
            raise ValueError("lambda1 must be nonnegative")
        if self.lambda2 < 0:
            raise ValueError("lambda2 must be nonnegative")
        if self.batch_size < 2:
            raise ValueError("batch_size must be at least 2")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.iterations < 0:
            raise ValueError("iterations must be nonnegative")
        if self.log_every < 1:
            raise ValueError("log_every must be at least 1")
        if self.checkpoint_every < 0:
            raise ValueError("checkpoint_every must be nonnegative")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
            "divergence": self.divergence.to_dict(),
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "iterations": self.iterations,
            "seed": self.seed,
            "log_every": self.log_every,
            "checkpoint_every": self.checkpoint_every,
        }
