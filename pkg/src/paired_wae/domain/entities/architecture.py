"""Network architecture entities."""

from dataclasses import dataclass, asdict
from enum import Enum
from math import prod
from typing import Any, Dict, Tuple


class NetworkKind(Enum):
    """Family of encoder/decoder networks."""

    CONV = "conv"
    DENSE = "dense"


class Activation(Enum):
    """Hidden-layer activation."""

    RELU = "relu"
    TANH = "tanh"


class Normalization(Enum):
    """Hidden-layer normalization."""

    BATCH = "batch"
    NONE = "none"


class OutputSquashing(Enum):
    """Decoder output function."""

    SIGMOID = "sigmoid"
    IDENTITY = "identity"


@dataclass(frozen=True)
class ArchitectureSpec:
    """
    Shape and capacity of the four maps E1, E2, D1, D2.

    For convolutional networks ``data_shape`` is (channels, height, width);
    for dense networks it is (features,). ``observation_shape`` is the shape of
    X2 when it differs from X1 (an empty tuple means both share ``data_shape``).
    ``decoder_channels`` are the input
    widths of the decoder layers, so the decoder has as many upsampling layers
    as entries; the last layer maps to the data channels.
    """

    name: str
    kind: NetworkKind
    data_shape: Tuple[int, ...]
    encoder_channels: Tuple[int, ...] = (32, 64, 128, 128)
    encoder_strides: Tuple[int, ...] = (1, 2, 2, 1)
    decoder_channels: Tuple[int, ...] = (128, 64, 32)
    decoder_strides: Tuple[int, ...] = (2, 2, 1)
    activation: Activation = Activation.RELU
    normalization: Normalization = Normalization.BATCH
    output_x1: OutputSquashing = OutputSquashing.SIGMOID
    output_x2: OutputSquashing = OutputSquashing.IDENTITY
    observation_shape: Tuple[int, ...] = ()

    def __post_init__(self) -> None:
        """Validate the layer layout."""
        if not self.data_shape or any(s < 1 for s in self.data_shape):
            raise ValueError(f"Invalid data shape: {self.data_shape}")
        if any(s < 1 for s in self.observation_shape):
            raise ValueError(f"Invalid observation shape: {self.observation_shape}")
        if not self.encoder_channels:
            raise ValueError("At least one encoder layer is required")
        if not self.decoder_channels:
            raise ValueError("At least one decoder layer is required")
        if any(c < 1 for c in self.encoder_channels + self.decoder_channels):
            raise ValueError("Layer widths must be positive")

        if self.kind == NetworkKind.CONV:
            if len(self.data_shape) != 3:
                raise ValueError(
                    "Convolutional networks need a (channels, height, width) shape"
                )
            if len(self.encoder_strides) != len(self.encoder_channels):
                raise ValueError("encoder_strides must align with encoder_channels")
            if len(self.decoder_strides) != len(self.decoder_channels):
                raise ValueError("decoder_strides must align with decoder_channels")
            if len(self.x2_shape) != 3:
                raise ValueError("Observation shape must be (channels, height, width)")
            down = prod(self.encoder_strides)
            up = prod(self.decoder_strides)
            for side in self.data_shape[1:] + self.x2_shape[1:]:
                if side % down or side % up:
                    raise ValueError(
                        f"Image side {side} must be divisible by the total "
                        f"encoder stride {down} and decoder stride {up}"
                    )
        elif len(self.data_shape) != 1 or len(self.x2_shape) != 1:
            raise ValueError("Dense networks need a (features,) shape")

    @property
    def is_image(self) -> bool:
        return self.kind == NetworkKind.CONV

    @property
    def x2_shape(self) -> Tuple[int, ...]:
        """Shape of X2 samples."""
        return self.observation_shape or self.data_shape

    @property
    def data_size(self) -> int:
        """Number of scalar entries per X1 sample."""
        return prod(self.data_shape)

    def encoder_feature_shape(
        self, shape: Tuple[int, ...] = ()
    ) -> Tuple[int, int, int]:
        """Shape of the last convolutional feature map of an encoder."""
        _, height, width = shape or self.data_shape
        down = prod(self.encoder_strides)
        return (self.encoder_channels[-1], height // down, width // down)

    def decoder_seed_shape(self, shape: Tuple[int, ...] = ()) -> Tuple[int, int, int]:
        """Shape of the feature map the decoder's dense layer reshapes into."""
        _, height, width = shape or self.data_shape
        up = prod(self.decoder_strides)
        return (self.decoder_channels[0], height // up, width // up)

    def to_dict(self) -> Dict[str, Any]:
        """Plain JSON-compatible representation."""
        data = asdict(self)
        for key, value in list(data.items()):
            if isinstance(value, Enum):
                data[key] = value.value
            elif isinstance(value, tuple):
                data[key] = list(value)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ArchitectureSpec":
        """Inverse of :meth:`to_dict`."""
        return cls(
            name=str(data["name"]),
            kind=NetworkKind(data["kind"]),
            data_shape=tuple(int(s) for s in data["data_shape"]),
            encoder_channels=tuple(int(c) for c in data["encoder_channels"]),
            encoder_strides=tuple(int(s) for s in data.get("encoder_strides", ())),
            decoder_channels=tuple(int(c) for c in data["decoder_channels"]),
            decoder_strides=tuple(int(s) for s in data.get("decoder_strides", ())),
            activation=Activation(data.get("activation", "relu")),
            normalization=Normalization(data.get("normalization", "batch")),
            output_x1=OutputSquashing(data.get("output_x1", "sigmoid")),
            output_x2=OutputSquashing(data.get("output_x2", "identity")),
            observation_shape=tuple(int(s) for s in data.get("observation_shape", ())),
        )


def mnist_reference() -> ArchitectureSpec:
    """Four conv encoder layers, three upsampling decoder layers, 28x28 inputs."""
    return ArchitectureSpec(
        name="mnist_reference",
        kind=NetworkKind.CONV,
        data_shape=(1, 28, 28),
    )


def celeba_translation() -> ArchitectureSpec:
    """Five down- and upsampling layers for 64x64 RGB faces."""
    return ArchitectureSpec(
        name="celeba_translation",
        kind=NetworkKind.CONV,
        data_shape=(3, 64, 64),
        encoder_channels=(32, 64, 128, 256, 512),
        encoder_strides=(2, 2, 2, 2, 2),
        decoder_channels=(512, 256, 128, 64, 32),
        decoder_strides=(2, 2, 2, 2, 2),
        output_x1=OutputSquashing.SIGMOID,
        output_x2=OutputSquashing.SIGMOID,
    )


def dense_toy(
    features: int,
    observation_features: int = 0,
    hidden: Tuple[int, ...] = (64, 64),
    activation: Activation = Activation.RELU,
) -> ArchitectureSpec:
    """Small multilayer dense networks for vector-valued toy tasks."""
    return ArchitectureSpec(
        name="dense_toy",
        kind=NetworkKind.DENSE,
        data_shape=(features,),
        observation_shape=(observation_features,) if observation_features else (),
        encoder_channels=hidden,
        encoder_strides=(),
        decoder_channels=tuple(reversed(hidden)),
        decoder_strides=(),
        activation=activation,
        normalization=Normalization.NONE,
        output_x1=OutputSquashing.IDENTITY,
        output_x2=OutputSquashing.IDENTITY,
    )
