"""Split latent space entities."""

from dataclasses import dataclass
from typing import Tuple

import torch

from ..exceptions import ShapeMismatchError


@dataclass(frozen=True)
class LatentSplit:
    """
    Dimensions of the latent blocks Z1 (private to X1), Z2 (shared) and
    Z3 (private to X2). Serialized vectors always use the order (z1, z2, z3).
    """

    d1: int
    d2: int
    d3: int

    def __post_init__(self) -> None:
        """Validate block dimensions."""
        for name, value in (("d1", self.d1), ("d2", self.d2), ("d3", self.d3)):
            if not isinstance(value, int) or isinstance(value, bool):
                raise ValueError(f"{name} must be an integer, got {value!r}")
            if value < 0:
                raise ValueError(f"{name} must be nonnegative, got {value}")
        if self.total < 1:
            raise ValueError("Latent split must have at least one dimension")

    @property
    def total(self) -> int:
        """Total latent dimension d1 + d2 + d3."""
        return self.d1 + self.d2 + self.d3

    @property
    def encoder1_dim(self) -> int:
        """Output dimension of E1, i.e. (z1, z2)."""
        return self.d1 + self.d2

    @property
    def encoder2_dim(self) -> int:
        """Output dimension of E2, i.e. (z2, z3)."""
        return self.d2 + self.d3

    @property
    def is_translation(self) -> bool:
        """Whether only the shared block exists, Z = Z2."""
        return self.d1 == 0 and self.d3 == 0

    def as_tuple(self) -> Tuple[int, int, int]:
        return (self.d1, self.d2, self.d3)

    def split(self, vectors: torch.Tensor) -> "LatentCode":
        """Partition concatenated (..., d1 + d2 + d3) vectors into blocks."""
        if vectors.shape[-1] != self.total:
            raise ShapeMismatchError(
                f"Expected latent width {self.total}, got {vectors.shape[-1]}"
            )
        z1, z2, z3 = torch.split(vectors, [self.d1, self.d2, self.d3], dim=-1)
        return LatentCode(z1=z1, z2=z2, z3=z3)

    def check(self, code: "LatentCode") -> None:
        """Raise if the code's block widths disagree with this split."""
        widths = (code.z1.shape[-1], code.z2.shape[-1], code.z3.shape[-1])
        if widths != self.as_tuple():
            raise ShapeMismatchError(
                f"Latent code blocks {widths} do not match split {self.as_tuple()}"
            )


@dataclass(frozen=True)
class LatentCode:
    """A (batch of) latent code(s) partitioned into (z1, z2, z3)."""

    z1: torch.Tensor
    z2: torch.Tensor
    z3: torch.Tensor

    def __post_init__(self) -> None:
        """Validate that the blocks share leading dimensions."""
        leading = {tuple(z.shape[:-1]) for z in (self.z1, self.z2, self.z3)}
        if len(leading) != 1:
            raise ShapeMismatchError(
                f"Latent blocks have inconsistent leading shapes: {sorted(leading)}"
            )

    @property
    def split(self) -> LatentSplit:
        return LatentSplit(
            int(self.z1.shape[-1]), int(self.z2.shape[-1]), int(self.z3.shape[-1])
        )

    def concat(self) -> torch.Tensor:
        """Concatenate the blocks in (z1, z2, z3) order."""
        return torch.cat([self.z1, self.z2, self.z3], dim=-1)

    def first(self) -> torch.Tensor:
        """The E1-side blocks (z1, z2)."""
        return torch.cat([self.z1, self.z2], dim=-1)

    def second(self) -> torch.Tensor:
        """The E2-side blocks (z2, z3)."""
        return torch.cat([self.z2, self.z3], dim=-1)

    def __len__(self) -> int:
        return int(self.z2.shape[0]) if self.z2.dim() > 1 else 1
