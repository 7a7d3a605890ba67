"""Domain entities package."""

from .architecture import (
    Activation,
    ArchitectureSpec,
    NetworkKind,
    Normalization,
    OutputSquashing,
)
from .latent import LatentCode, LatentSplit
from .measures import CostMatrix, DivergenceKind, DivergenceResult, EmpiricalMeasure
from .run import (
    EvaluationReport,
    EvaluationRequest,
    EvaluationSettings,
    PlotRequest,
    PlotResult,
    RunConfig,
    SamplingRequest,
    SamplingResult,
    TrainingRequest,
    TrainingSummary,
)
from .tasks import DataSource, GaussianPair, LinearGaussianOracle, TaskKind, TaskSpec
from .training import (
    DivergenceSettings,
    MmdSettings,
    SinkhornSettings,
    SlicedSettings,
    TrainConfig,
)

__all__ = [
    "Activation",
    "ArchitectureSpec",
    "NetworkKind",
    "Normalization",
    "OutputSquashing",
    "LatentCode",
    "LatentSplit",
    "CostMatrix",
    "DivergenceKind",
    "DivergenceResult",
    "EmpiricalMeasure",
    "EvaluationReport",
    "EvaluationRequest",
    "EvaluationSettings",
    "PlotRequest",
    "PlotResult",
    "RunConfig",
    "SamplingRequest",
    "SamplingResult",
    "TrainingRequest",
    "TrainingSummary",
    "DataSource",
    "GaussianPair",
    "LinearGaussianOracle",
    "TaskKind",
    "TaskSpec",
    "DivergenceSettings",
    "MmdSettings",
    "SinkhornSettings",
    "SlicedSettings",
    "TrainConfig",
]
