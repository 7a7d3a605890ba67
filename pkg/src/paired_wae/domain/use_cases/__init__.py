"""Use cases package for the paired WAE application."""

from .evaluation_use_case import EvaluationUseCase
from .plot_use_case import PlotUseCase
from .sampling_use_case import SamplingUseCase
from .training_use_case import TrainingUseCase

__all__ = ["EvaluationUseCase", "PlotUseCase", "SamplingUseCase", "TrainingUseCase"]
