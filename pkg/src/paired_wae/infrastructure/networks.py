"""Paired encoder/decoder networks E1, E2, D1, D2."""

from contextlib import contextmanager
from typing import Dict, Iterator, List, Optional, Tuple

import torch
from torch import nn

from ..domain.entities.architecture import (
    Activation,
    ArchitectureSpec,
    NetworkKind,
    Normalization,
    OutputSquashing,
)
from ..domain.entities.latent import LatentSplit
from ..domain.exceptions import ConfigurationError, ShapeMismatchError
from .logger import get_logger


def _activation(kind: Activation) -> nn.Module:
    return nn.ReLU() if kind == Activation.RELU else nn.Tanh()


def _squashing(kind: OutputSquashing) -> nn.Module:
    return nn.Sigmoid() if kind == OutputSquashing.SIGMOID else nn.Identity()


def _conv_encoder(
    spec: ArchitectureSpec, shape: Tuple[int, ...], out_dim: int
) -> nn.Sequential:
    layers: List[nn.Module] = []
    in_channels = shape[0]
    for channels, stride in zip(spec.encoder_channels, spec.encoder_strides):
        layers.append(nn.Conv2d(in_channels, channels, 3, stride=stride, padding=1))
        if spec.normalization == Normalization.BATCH:
            layers.append(nn.BatchNorm2d(channels))
        layers.append(_activation(spec.activation))
        in_channels = channels
    c, h, w = spec.encoder_feature_shape(shape)
    layers += [nn.Flatten(), nn.Linear(c * h * w, out_dim)]
    return nn.Sequential(*layers)


def _conv_decoder(
    spec: ArchitectureSpec,
    shape: Tuple[int, ...],
    in_dim: int,
    squashing: OutputSquashing,
) -> nn.Sequential:
    seed_shape = spec.decoder_seed_shape(shape)
    layers: List[nn.Module] = [
        nn.Linear(in_dim, seed_shape[0] * seed_shape[1] * seed_shape[2]),
        nn.Unflatten(1, seed_shape),
        _activation(spec.activation),
    ]
    widths = list(spec.decoder_channels) + [shape[0]]
    last = len(spec.decoder_channels) - 1
    for i, stride in enumerate(spec.decoder_strides):
        if stride == 1:
            layers.append(nn.Conv2d(widths[i], widths[i + 1], 3, padding=1))
        else:
            # kernel = 2 * stride with padding stride / 2 multiplies the side by stride
            layers.append(
                nn.ConvTranspose2d(
                    widths[i],
                    widths[i + 1],
                    2 * stride,
                    stride=stride,
                    padding=stride // 2,
                )
            )
        if i < last:
            if spec.normalization == Normalization.BATCH:
                layers.append(nn.BatchNorm2d(widths[i + 1]))
            layers.append(_activation(spec.activation))
    layers.append(_squashing(squashing))
    return nn.Sequential(*layers)


def _dense_stack(
    spec: ArchitectureSpec,
    in_dim: int,
    hidden: Tuple[int, ...],
    out_dim: int,
    squashing: Optional[OutputSquashing],
) -> nn.Sequential:
    layers: List[nn.Module] = []
    width = in_dim
    for size in hidden:
        layers.append(nn.Linear(width, size))
        if spec.normalization == Normalization.BATCH:
            layers.append(nn.BatchNorm1d(size))
        layers.append(_activation(spec.activation))
        width = size
    layers.append(nn.Linear(width, out_dim))
    if squashing is not None:
        layers.append(_squashing(squashing))
    return nn.Sequential(*layers)


class PairedModel(nn.Module):
    """
    Two autoencoders sharing the latent block z2.

    E1: X1 -> (z1, z2), E2: X2 -> (z2, z3), D1: (z1, z2) -> X1 and
    D2: (z2, z3) -> X2. Each map only receives its own arguments, so D1
    cannot read z3, D2 cannot read z1 and neither encoder sees the other
    modality.
    """

    def __init__(self, spec: ArchitectureSpec, split: LatentSplit) -> None:
        super().__init__()
        if split.encoder1_dim < 1 or split.encoder2_dim < 1:
            raise ConfigurationError(
                f"Both encoders need a nonempty output; split {split.as_tuple()}"
            )
        self.spec = spec
        self.split = split
        self.steps = 0
        self._logger = get_logger(__name__)

        x1_shape, x2_shape = spec.data_shape, spec.x2_shape
        if spec.kind == NetworkKind.CONV:
            self.encoder1 = _conv_encoder(spec, x1_shape, split.encoder1_dim)
            self.encoder2 = _conv_encoder(spec, x2_shape, split.encoder2_dim)
            self.decoder1 = _conv_decoder(
                spec, x1_shape, split.encoder1_dim, spec.output_x1
            )
            self.decoder2 = _conv_decoder(
                spec, x2_shape, split.encoder2_dim, spec.output_x2
            )
        else:
            self.encoder1 = _dense_stack(
                spec, x1_shape[0], spec.encoder_channels, split.encoder1_dim, None
            )
            self.encoder2 = _dense_stack(
                spec, x2_shape[0], spec.encoder_channels, split.encoder2_dim, None
            )
            self.decoder1 = _dense_stack(
                spec,
                split.encoder1_dim,
                spec.decoder_channels,
                x1_shape[0],
                spec.output_x1,
            )
            self.decoder2 = _dense_stack(
                spec,
                split.encoder2_dim,
                spec.decoder_channels,
                x2_shape[0],
                spec.output_x2,
            )
        self._logger.debug(
            f"Built {spec.kind.value} model '{spec.name}' with split "
            f"{split.as_tuple()} and {self.parameter_count()} parameters"
        )

    @property
    def is_trained(self) -> bool:
        return self.steps > 0

    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.parameters())

    def _check_input(self, x: torch.Tensor, shape: Tuple[int, ...], name: str) -> None:
        if tuple(x.shape[1:]) != tuple(shape):
            raise ShapeMismatchError(
                f"{name} must have shape (batch, {', '.join(map(str, shape))}), "
                f"got {tuple(x.shape)}"
            )

    def _check_block(self, z: torch.Tensor, width: int, name: str) -> None:
        if z.dim() != 2 or z.shape[1] != width:
            raise ShapeMismatchError(
                f"{name} must have shape (batch, {width}), got {tuple(z.shape)}"
            )

    def encode1(self, x1: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        """E1(x1) split into (z1, z2)."""
        self._check_input(x1, self.spec.data_shape, "x1")
        code = self.encoder1(x1)
        z1, z2 = torch.split(code, [self.split.d1, self.split.d2], dim=1)
        return z1, z2

    def encode2(self, x2: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        """E2(x2) split into (z2, z3)."""
        self._check_input(x2, self.spec.x2_shape, "x2")
        code = self.encoder2(x2)
        z2, z3 = torch.split(code, [self.split.d2, self.split.d3], dim=1)
        return z2, z3

    def decode1(self, z1: torch.Tensor, z2: torch.Tensor) -> torch.Tensor:
        """D1(z1, z2)."""
        self._check_block(z1, self.split.d1, "z1")
        self._check_block(z2, self.split.d2, "z2")
        return self.decoder1(torch.cat([z1, z2], dim=1))

    def decode2(self, z2: torch.Tensor, z3: torch.Tensor) -> torch.Tensor:
        """D2(z2, z3)."""
        self._check_block(z2, self.split.d2, "z2")
        self._check_block(z3, self.split.d3, "z3")
        return self.decoder2(torch.cat([z2, z3], dim=1))

    def cross_reconstruct_x1(self, z1: torch.Tensor, x2: torch.Tensor) -> torch.Tensor:
        """D1(z1, z2) with z2 the shared block of E2(x2)."""
        z2, _ = self.encode2(x2)
        if z2.shape[0] == 1 and z1.shape[0] > 1:
            z2 = z2.expand(z1.shape[0], -1)
        return self.decode1(z1, z2)

    def cross_reconstruct_x2(self, x1: torch.Tensor, z3: torch.Tensor) -> torch.Tensor:
        """D2(z2, z3) with z2 the shared block of E1(x1)."""
        _, z2 = self.encode1(x1)
        if z2.shape[0] == 1 and z3.shape[0] > 1:
            z2 = z2.expand(z3.shape[0], -1)
        return self.decode2(z2, z3)

    def _require_translation(self) -> None:
        if not self.split.is_translation:
            raise ConfigurationError(
                f"Translation needs the split (0, d2, 0), got {self.split.as_tuple()}"
            )

    def translate(self, x1: torch.Tensor) -> torch.Tensor:
        """T(x1) = D2(E1(x1))."""
        self._require_translation()
        _, z2 = self.encode1(x1)
        return self.decode2(z2, z2.new_zeros(z2.shape[0], 0))

    def translate_inverse(self, x2: torch.Tensor) -> torch.Tensor:
        """T^-1(x2) = D1(E2(x2))."""
        self._require_translation()
        z2, _ = self.encode2(x2)
        return self.decode1(z2.new_zeros(z2.shape[0], 0), z2)

    def forward(
        self, x1: torch.Tensor, x2: torch.Tensor
    ) -> Tuple[torch.Tensor, torch.Tensor]:
        """Autoencoder reconstructions (D1(E1(x1)), D2(E2(x2)))."""
        return self.decode1(*self.encode1(x1)), self.decode2(*self.encode2(x2))

    def _floating_state(self) -> Dict[str, torch.Tensor]:
        return {k: v for k, v in self.state_dict().items() if v.is_floating_point()}

    def state_layout(self) -> List[Tuple[str, Tuple[int, ...]]]:
        """Names and shapes of the entries packed by :meth:`state_vector`."""
        return [(k, tuple(v.shape)) for k, v in self._floating_state().items()]

    def integer_state(self) -> Dict[str, int]:
        """Integer buffers (batch-norm step counters) kept outside the flat vector."""
        return {
            k: int(v.item())
            for k, v in self.state_dict().items()
            if not v.is_floating_point() and v.numel() == 1
        }

    def state_vector(self) -> torch.Tensor:
        """All floating-point parameters and running statistics as one flat vector."""
        state = self._floating_state()
        tensors = [v.detach().reshape(-1).cpu() for v in state.values()]
        return torch.cat(tensors) if tensors else torch.zeros(0)

    def load_state_vector(
        self, vector: torch.Tensor, integer_state: Optional[Dict[str, int]] = None
    ) -> None:
        """
        Inverse of :meth:`state_vector`.

        Raises:
            ShapeMismatchError: If the vector length differs from the model's
        """
        state = self._floating_state()
        expected = sum(v.numel() for v in state.values())
        if vector.dim() != 1 or vector.numel() != expected:
            raise ShapeMismatchError(
                f"State vector has {vector.numel()} entries, model needs {expected}"
            )
        offset = 0
        updated: Dict[str, torch.Tensor] = {}
        for name, value in state.items():
            chunk = vector[offset : offset + value.numel()]
            updated[name] = chunk.reshape(value.shape).to(value.dtype)
            offset += value.numel()
        for name, count in (integer_state or {}).items():
            updated[name] = torch.tensor(count, dtype=torch.long)
        self.load_state_dict(updated, strict=False)


@contextmanager
def inference_mode(model: nn.Module) -> Iterator[nn.Module]:
    """Evaluate normalization layers with running statistics, then restore the mode."""
    was_training = model.training
    model.eval()
    try:
        yield model
    finally:
        model.train(was_training)


def build_model(
    spec: ArchitectureSpec,
    split: LatentSplit,
    seed: int = 0,
    dtype: torch.dtype = torch.float32,
) -> PairedModel:
    """Construct a PairedModel whose initial weights depend only on ``seed``."""
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        model = PairedModel(spec, split)
    return model.to(dtype)
