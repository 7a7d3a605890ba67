"""Infrastructure package initialization."""

from .conditional_sampler import ConditionalSampler
from .logger import get_logger
from .networks import PairedModel, build_model

__all__ = [
    "ConditionalSampler",
    "PairedModel",
    "build_model",
    "get_logger",
]
