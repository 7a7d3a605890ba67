"""Run configuration, requests and results of the use cases."""

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from .architecture import ArchitectureSpec
from .latent import LatentSplit
from .tasks import TaskSpec
from .training import TrainConfig

DEFAULT_SIGMAS: Tuple[float, ...] = (-1.0, -0.5, 0.0, 0.5, 1.0)


@dataclass(frozen=True)
class EvaluationSettings:
    """Sizes used by sampling and evaluation."""

    n_samples: int = 512
    n_conditions: int = 10
    n_test_images: int = 100
    latent_sample_size: int = 256
    use_oracle: bool = True

    def __post_init__(self) -> None:
        if self.n_samples < 2:
            raise ValueError("n_samples must be at least 2")
        if self.n_conditions < 1 or self.n_test_images < 1:
            raise ValueError("n_conditions and n_test_images must be positive")
        if self.latent_sample_size < 2:
            raise ValueError("latent_sample_size must be at least 2")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_samples": self.n_samples,
            "n_conditions": self.n_conditions,
            "n_test_images": self.n_test_images,
            "latent_sample_size": self.latent_sample_size,
            "use_oracle": self.use_oracle,
        }


@dataclass(frozen=True, eq=False)
class RunConfig:
    """
    Everything that defines one experiment.

    The output directory is where artifacts go, not what they are, so it is
    excluded from the canonical text and therefore from the config hash.
    """

    task: TaskSpec
    model: ArchitectureSpec
    latent: LatentSplit
    train: TrainConfig
    output_dir: Path = Path("runs")
    evaluation: EvaluationSettings = field(default_factory=EvaluationSettings)

    def to_dict(self, include_output: bool = True) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "task": self.task.to_dict(),
            "model": self.model.to_dict(),
            "latent": {
                "d1": self.latent.d1,
                "d2": self.latent.d2,
                "d3": self.latent.d3,
            },
            "train": self.train.to_dict(),
            "evaluation": self.evaluation.to_dict(),
        }
        if include_output:
            data["output_dir"] = str(self.output_dir)
        return data

    def canonical_text(self) -> str:
        """Deterministic serialization used for hashing."""
        return json.dumps(
            self.to_dict(include_output=False), sort_keys=True, separators=(",", ":")
        )

    @property
    def config_hash(self) -> str:
        """SHA-256 of the canonical text."""
        return hashlib.sha256(self.canonical_text().encode("utf-8")).hexdigest()

    @property
    def run_label(self) -> str:
        return f"{self.task.kind.value}(seed={self.train.seed})"


@dataclass
class TrainingRequest:
    """Request for a training run."""

    config: RunConfig
    resume_from: Optional[Path] = None

    def __post_init__(self) -> None:
        if self.resume_from is not None and not self.resume_from.exists():
            raise ValueError(f"Checkpoint does not exist: {self.resume_from}")


@dataclass
class TrainingSummary:
    """Result of a training run."""

    config_hash: str
    checkpoint_path: Path
    checkpoint_sha256: str
    metrics_path: Path
    steps: int
    initial_loss: float
    final_loss: float
    start_time: datetime
    end_time: Optional[datetime] = None
    unconverged_steps: int = 0

    @property
    def duration(self) -> Optional[float]:
        """Training duration in seconds."""
        if self.end_time and self.start_time:
            return (self.end_time - self.start_time).total_seconds()
        return None

    @property
    def loss_reduction(self) -> float:
        """Relative decrease of the total loss from the first step."""
        if self.initial_loss == 0:
            return 0.0
        return 1.0 - self.final_loss / self.initial_loss


@dataclass
class SamplingRequest:
    """Request for conditional samples from a checkpoint."""

    checkpoint_path: Path
    condition: str
    n: int = 64
    sigmas: Tuple[float, ...] = DEFAULT_SIGMAS
    axis_index: Optional[int] = None
    seed: int = 0
    output_dir: Optional[Path] = None
    reverse: bool = False

    def __post_init__(self) -> None:
        if not self.checkpoint_path.exists():
            raise ValueError(f"Checkpoint does not exist: {self.checkpoint_path}")
        if self.n < 2:
            raise ValueError("n must be at least 2 to estimate a standard deviation")
        if not self.sigmas:
            raise ValueError("At least one sigma is required")


@dataclass
class SamplingResult:
    """Files written by a sampling run."""

    config_hash: str
    output_dir: Path
    grid_path: Optional[Path]
    array_paths: List[Path]
    axis_index: Optional[int]
    dead_private_block: bool = False


@dataclass
class EvaluationRequest:
    """Request for an evaluation report."""

    checkpoint_path: Path
    use_oracle: bool = True
    config_path: Optional[Path] = None
    metrics_path: Optional[Path] = None
    output_path: Optional[Path] = None
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.checkpoint_path.exists():
            raise ValueError(f"Checkpoint does not exist: {self.checkpoint_path}")
        for path in (self.config_path, self.metrics_path):
            if path is not None and not path.exists():
                raise ValueError(f"File does not exist: {path}")


@dataclass
class EvaluationReport:
    """Task-appropriate metrics of one checkpoint."""

    config_hash: str
    task: str
    metrics: Dict[str, float]
    checks: Dict[str, bool] = field(default_factory=dict)
    output_path: Optional[Path] = None

    @property
    def all_checks_passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config_hash": self.config_hash,
            "task": self.task,
            "metrics": dict(sorted(self.metrics.items())),
            "checks": dict(sorted(self.checks.items())),
        }


@dataclass
class PlotRequest:
    """Request to render grids from a directory of sample arrays."""

    samples_dir: Path
    output_path: Optional[Path] = None

    def __post_init__(self) -> None:
        if not self.samples_dir.is_dir():
            raise ValueError(f"Samples directory does not exist: {self.samples_dir}")


@dataclass
class PlotResult:
    """Rendered figure."""

    config_hash: str
    output_path: Path
    rows: int
