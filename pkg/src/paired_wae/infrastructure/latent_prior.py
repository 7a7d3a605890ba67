"""Standard normal prior on the split latent space and its perturbation codes."""

from typing import Optional

import numpy as np
import torch

from ..domain.entities.latent import LatentCode, LatentSplit
from ..domain.exceptions import ConfigurationError


def draw_seed(seed: int, index: int) -> np.random.SeedSequence:
    """Seed sequence of the index-th independent draw stream under ``seed``."""
    if seed < 0 or index < 0:
        raise ValueError("seed and index must be nonnegative")
    return np.random.SeedSequence([seed, index])


def _normal_code(
    split: LatentSplit,
    n: int,
    rng: np.random.Generator,
    dtype: torch.dtype,
) -> LatentCode:
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    # Row-major draws: the first k rows never depend on n.
    values = rng.standard_normal((n, split.total))
    return split.split(torch.from_numpy(values).to(dtype))


def sample_prior(
    split: LatentSplit,
    n: int,
    seed: int,
    dtype: torch.dtype = torch.float32,
) -> LatentCode:
    """
    Draw n i.i.d. N(0, I) codes over all d1 + d2 + d3 coordinates.

    Args:
        split: Block dimensions
        n: Number of codes, at least 1
        seed: Seed of the generator; equal seeds give equal codes
        dtype: Floating dtype of the returned blocks

    Returns:
        LatentCode whose blocks have shape (n, d_k)
    """
    return _normal_code(split, n, np.random.default_rng(seed), dtype)


def prior_for_step(
    split: LatentSplit,
    n: int,
    seed: int,
    step: int,
    stream: int = 0,
    dtype: torch.dtype = torch.float32,
) -> LatentCode:
    """Prior draw of one optimization step; ``stream`` separates independent uses."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, step, stream]))
    return _normal_code(split, n, rng, dtype)


def sample_private(
    dim: int,
    n: int,
    seed: int,
    dtype: torch.dtype = torch.float32,
) -> torch.Tensor:
    """n standard normal vectors of one private block, shape (n, dim)."""
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    values = np.random.default_rng(seed).standard_normal((n, dim))
    return torch.from_numpy(values).to(dtype)


def perturbation_code(
    split: LatentSplit,
    sigma: float,
    axis_index: int,
    dtype: torch.dtype = torch.float32,
) -> torch.Tensor:
    """
    The private code sigma * e_axis in R^{d1}.

    Raises:
        ValueError: If axis_index is outside [0, d1)
    """
    if not 0 <= axis_index < split.d1:
        raise ValueError(
            f"axis_index {axis_index} out of range for d1 = {split.d1}"
        )
    code = torch.zeros(split.d1, dtype=dtype)
    code[axis_index] = sigma
    return code


def random_axis(
    split: LatentSplit, seed: int, private_dim: Optional[int] = None
) -> int:
    """
    Seeded choice of the unit vector e_j used for a whole sigma ladder.

    ``private_dim`` selects the block the axis lives in (d1 by default).
    """
    dim = split.d1 if private_dim is None else private_dim
    if dim < 1:
        raise ConfigurationError("No private block to perturb: its dimension is 0")
    return int(np.random.default_rng(seed).integers(dim))
