"""Experiment task entities: forward models, noise models and oracles."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np


class TaskKind(Enum):
    """Experiment families."""

    DENOISING = "denoising"
    INPAINTING = "inpainting"
    TRANSLATION = "translation"

    @classmethod
    def from_alias(cls, alias: str) -> "TaskKind":
        """Map CLI aliases (denoise, inpaint, translate) onto task kinds."""
        aliases = {
            "denoise": cls.DENOISING,
            "inpaint": cls.INPAINTING,
            "translate": cls.TRANSLATION,
        }
        key = alias.strip().lower()
        if key in aliases:
            return aliases[key]
        return cls(key)


class DataSource(Enum):
    """Where the samples of a task come from."""

    MNIST = "mnist"
    LINEAR_GAUSSIAN = "linear_gaussian"
    GAUSSIAN_TRANSLATION = "gaussian_translation"
    MNIST_DIGITS = "mnist_digits"
    IMAGE_FOLDER = "image_folder"


def _as_matrix(value: Any, name: str) -> np.ndarray:
    matrix = np.atleast_2d(np.asarray(value, dtype=np.float64))
    if matrix.ndim != 2:
        raise ValueError(f"{name} must be a matrix")
    return matrix


def _check_spd(matrix: np.ndarray, name: str) -> None:
    if matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"{name} must be square, got {matrix.shape}")
    if not np.allclose(matrix, matrix.T, atol=1e-10):
        raise ValueError(f"{name} must be symmetric")
    try:
        np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError as e:
        raise ValueError(f"{name} must be positive definite: {e}")


@dataclass(frozen=True, eq=False)
class LinearGaussianOracle:
    """
    X1 ~ N(m0, S0) and X2 = A X1 + eps with eps ~ N(0, Se).

    The posterior of X1 given X2 = x2 is Gaussian with covariance
    (S0^-1 + A^T Se^-1 A)^-1 and a mean affine in x2.
    """

    prior_mean: np.ndarray
    prior_cov: np.ndarray
    forward: np.ndarray
    noise_cov: np.ndarray

    def __post_init__(self) -> None:
        """Validate dimensions and positive definiteness."""
        object.__setattr__(
            self, "prior_mean", np.asarray(self.prior_mean, dtype=np.float64).ravel()
        )
        object.__setattr__(self, "prior_cov", _as_matrix(self.prior_cov, "prior_cov"))
        object.__setattr__(self, "forward", _as_matrix(self.forward, "forward"))
        object.__setattr__(self, "noise_cov", _as_matrix(self.noise_cov, "noise_cov"))

        n = self.prior_mean.shape[0]
        if self.prior_cov.shape != (n, n):
            raise ValueError(
                f"prior_cov shape {self.prior_cov.shape} does not match mean ({n},)"
            )
        if self.forward.shape[1] != n:
            raise ValueError(
                f"forward operator shape {self.forward.shape} does not act on R^{n}"
            )
        m = self.forward.shape[0]
        if self.noise_cov.shape != (m, m):
            raise ValueError(
                f"noise_cov shape {self.noise_cov.shape} does not match "
                f"observation dimension {m}"
            )
        _check_spd(self.prior_cov, "prior_cov")
        _check_spd(self.noise_cov, "noise_cov")

    @property
    def x1_dim(self) -> int:
        return int(self.prior_mean.shape[0])

    @property
    def x2_dim(self) -> int:
        return int(self.forward.shape[0])

    @property
    def posterior_cov(self) -> np.ndarray:
        """Sigma_post = (S0^-1 + A^T Se^-1 A)^-1, independent of x2."""
        precision = np.linalg.inv(self.prior_cov) + self.forward.T @ np.linalg.solve(
            self.noise_cov, self.forward
        )
        cov = np.linalg.inv(precision)
        return 0.5 * (cov + cov.T)

    @classmethod
    def isotropic_denoising(
        cls, dim: int = 2, noise_std: float = 0.5
    ) -> "LinearGaussianOracle":
        """X1 ~ N(0, I), X2 = X1 + N(0, noise_std^2 I)."""
        return cls(
            prior_mean=np.zeros(dim),
            prior_cov=np.eye(dim),
            forward=np.eye(dim),
            noise_cov=noise_std**2 * np.eye(dim),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "prior_mean": self.prior_mean.tolist(),
            "prior_cov": self.prior_cov.tolist(),
            "forward": self.forward.tolist(),
            "noise_cov": self.noise_cov.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "LinearGaussianOracle":
        return cls(
            prior_mean=np.asarray(data["prior_mean"]),
            prior_cov=np.asarray(data["prior_cov"]),
            forward=np.asarray(data["forward"]),
            noise_cov=np.asarray(data["noise_cov"]),
        )


@dataclass(frozen=True, eq=False)
class GaussianPair:
    """Source N(m1, S1) and target N(m2, S2) of a translation toy task."""

    mean1: np.ndarray
    cov1: np.ndarray
    mean2: np.ndarray
    cov2: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "mean1", np.asarray(self.mean1, dtype=np.float64).ravel()
        )
        object.__setattr__(
            self, "mean2", np.asarray(self.mean2, dtype=np.float64).ravel()
        )
        object.__setattr__(self, "cov1", _as_matrix(self.cov1, "cov1"))
        object.__setattr__(self, "cov2", _as_matrix(self.cov2, "cov2"))
        d = self.mean1.shape[0]
        if self.mean2.shape != (d,):
            raise ValueError("Translation means must share one dimension")
        if self.cov1.shape != (d, d) or self.cov2.shape != (d, d):
            raise ValueError("Translation covariances must be d x d")
        _check_spd(self.cov1, "cov1")
        _check_spd(self.cov2, "cov2")

    @property
    def dim(self) -> int:
        return int(self.mean1.shape[0])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mean1": self.mean1.tolist(),
            "cov1": self.cov1.tolist(),
            "mean2": self.mean2.tolist(),
            "cov2": self.cov2.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GaussianPair":
        return cls(
            mean1=np.asarray(data["mean1"]),
            cov1=np.asarray(data["cov1"]),
            mean2=np.asarray(data["mean2"]),
            cov2=np.asarray(data["cov2"]),
        )


@dataclass(frozen=True, eq=False)
class TaskSpec:
    """
    One experiment: the forward model, its noise, the data source and,
    when the task is analytic, its oracle.

    Attributes:
        kind: denoising, inpainting or translation
        source: data source of X1 (and X2 for translation)
        noise_std: standard deviation of the additive Gaussian noise
        mask: inpainting mask M in [0, 1]^shape (None means the left-half mask)
        data_dir: directory with IDX files or image folders
        n_train: number of training samples (or pairs)
        n_test: number of held-out samples (or pairs)
        linear_gaussian: oracle of the linear-Gaussian toy task
        gaussian_pair: source/target Gaussians of the translation toy task
        digits: two label groups for MNIST digit-subset translation
        image_dirs: two folders of images for the image-folder translation recipe
    """

    kind: TaskKind
    source: DataSource
    noise_std: Optional[float] = None
    mask: Optional[np.ndarray] = None
    data_dir: Optional[str] = None
    n_train: int = 60000
    n_test: int = 10000
    linear_gaussian: Optional[LinearGaussianOracle] = None
    gaussian_pair: Optional[GaussianPair] = None
    digits: Tuple[Tuple[int, ...], Tuple[int, ...]] = field(
        default_factory=lambda: ((0,), (1,))
    )
    image_dirs: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        """Validate the noise model, mask and oracle against the task kind."""
        if self.noise_std is None:
            defaults = {TaskKind.DENOISING: 1.0, TaskKind.INPAINTING: 0.1}
            if self.source == DataSource.LINEAR_GAUSSIAN:
                noise = None
            else:
                noise = defaults.get(self.kind)
            object.__setattr__(self, "noise_std", noise)
        if self.noise_std is not None and self.noise_std <= 0:
            raise ValueError("noise_std must be positive where a noise model exists")

        if self.mask is not None:
            mask = np.asarray(self.mask, dtype=np.float32)
            if mask.min() < 0 or mask.max() > 1:
                raise ValueError("Inpainting mask entries must lie in [0, 1]")
            object.__setattr__(self, "mask", mask)

        if self.n_train < 1 or self.n_test < 1:
            raise ValueError("n_train and n_test must be positive")

        if self.source == DataSource.LINEAR_GAUSSIAN:
            if self.linear_gaussian is None:
                raise ValueError("linear_gaussian source needs an oracle")
            if self.kind == TaskKind.TRANSLATION:
                raise ValueError("linear_gaussian source is a paired inverse problem")
        if self.source == DataSource.GAUSSIAN_TRANSLATION:
            if self.gaussian_pair is None:
                raise ValueError("gaussian_translation source needs a gaussian_pair")
            if self.kind != TaskKind.TRANSLATION:
                raise ValueError("gaussian_translation source needs translation kind")
        if self.source in (DataSource.MNIST_DIGITS, DataSource.IMAGE_FOLDER):
            if self.kind != TaskKind.TRANSLATION:
                raise ValueError(f"{self.source.value} source needs translation kind")
        if self.source == DataSource.IMAGE_FOLDER and len(self.image_dirs) != 2:
            raise ValueError("image_folder source needs exactly two image_dirs")

    @property
    def is_paired(self) -> bool:
        """Inverse problems train on joint samples; translation on marginals."""
        return self.kind != TaskKind.TRANSLATION

    @property
    def has_oracle(self) -> bool:
        return self.linear_gaussian is not None or self.gaussian_pair is not None

    @property
    def label(self) -> str:
        return f"{self.kind.value}/{self.source.value}"

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "kind": self.kind.value,
            "source": self.source.value,
            "noise_std": self.noise_std,
            "n_train": self.n_train,
            "n_test": self.n_test,
        }
        if self.mask is not None:
            data["mask"] = np.asarray(self.mask).tolist()
        if self.data_dir is not None:
            data["data_dir"] = self.data_dir
        if self.linear_gaussian is not None:
            data["linear_gaussian"] = self.linear_gaussian.to_dict()
        if self.gaussian_pair is not None:
            data["gaussian_pair"] = self.gaussian_pair.to_dict()
        if self.source == DataSource.MNIST_DIGITS:
            data["digits"] = [list(group) for group in self.digits]
        if self.image_dirs:
            data["image_dirs"] = list(self.image_dirs)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TaskSpec":
        digits: List[Tuple[int, ...]] = [
            tuple(int(d) for d in group) for group in data.get("digits", [[0], [1]])
        ]
        return cls(
            kind=TaskKind.from_alias(str(data["kind"])),
            source=DataSource(data["source"]),
            noise_std=data.get("noise_std"),
            mask=np.asarray(data["mask"]) if data.get("mask") is not None else None,
            data_dir=data.get("data_dir"),
            n_train=int(data.get("n_train", 60000)),
            n_test=int(data.get("n_test", 10000)),
            linear_gaussian=(
                LinearGaussianOracle.from_dict(data["linear_gaussian"])
                if data.get("linear_gaussian")
                else None
            ),
            gaussian_pair=(
                GaussianPair.from_dict(data["gaussian_pair"])
                if data.get("gaussian_pair")
                else None
            ),
            digits=(digits[0], digits[1]),
            image_dirs=tuple(str(p) for p in data.get("image_dirs", ())),
        )
