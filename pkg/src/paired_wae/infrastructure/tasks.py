"""Forward models, dataset generation and analytic oracles of the experiments."""

from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import sqrtm

from ..domain.entities.tasks import (
    DataSource,
    GaussianPair,
    LinearGaussianOracle,
    TaskKind,
    TaskSpec,
)
from ..domain.exceptions import ConfigurationError, ShapeMismatchError
from .idx_reader import load_mnist
from .logger import get_logger
from .system_resource_manager import SystemResourceManager

SHARD_SIZE = 4096


def left_half_mask(shape: Sequence[int]) -> np.ndarray:
    """
    Inpainting mask with zeros on the left half of the last axis.

    For a width of 28 the columns 0..13 are zero and 14..27 are one.
    """
    shape = tuple(int(s) for s in shape)
    if not shape:
        raise ValueError("Mask shape must not be empty")
    mask = np.ones(shape, dtype=np.float32)
    mask[..., : shape[-1] // 2] = 0.0
    return mask


def make_denoising_pair(
    x1: np.ndarray, noise_std: float, seed: int
) -> Tuple[np.ndarray, np.ndarray]:
    """
    x2 = x1 + eps with eps ~ N(0, noise_std^2) per entry.

    Noisy observations are not clipped, so x2 may leave [0, 1].
    """
    if noise_std < 0:
        raise ValueError("noise_std must be nonnegative")
    x1 = np.asarray(x1, dtype=np.float32)
    noise = np.random.default_rng(seed).standard_normal(x1.shape)
    x2 = (x1 + noise_std * noise).astype(np.float32)
    return x1, x2


def make_inpainting_pair(
    x1: np.ndarray, mask: np.ndarray, noise_std: float, seed: int
) -> Tuple[np.ndarray, np.ndarray]:
    """
    x2 = M * x1 + eps with eps ~ N(0, noise_std^2) per entry.

    Args:
        x1: One image or a batch whose trailing axes match the mask
        mask: Mask M in [0, 1]
        noise_std: Noise standard deviation
        seed: Noise seed

    Raises:
        ShapeMismatchError: If the mask does not match the trailing image axes
    """
    x1 = np.asarray(x1, dtype=np.float32)
    mask = np.asarray(mask, dtype=np.float32)
    if mask.ndim > x1.ndim or x1.shape[x1.ndim - mask.ndim :] != mask.shape:
        raise ShapeMismatchError(
            f"Mask shape {mask.shape} does not match image shape {x1.shape}"
        )
    _, noisy = make_denoising_pair(mask * x1, noise_std, seed)
    return x1, noisy


def make_linear_gaussian_pairs(
    oracle: LinearGaussianOracle, n: int, seed: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Joint samples X1 ~ N(m0, S0), X2 = A X1 + eps."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    x1 = rng.multivariate_normal(oracle.prior_mean, oracle.prior_cov, size=n)
    noise = rng.multivariate_normal(np.zeros(oracle.x2_dim), oracle.noise_cov, size=n)
    x2 = x1 @ oracle.forward.T + noise
    return x1.astype(np.float32), x2.astype(np.float32)


@dataclass
class GaussianPosterior:
    """N(mean, cov); ``mean`` has one row per conditioning observation."""

    mean: np.ndarray
    cov: np.ndarray

    @property
    def std(self) -> np.ndarray:
        """Marginal standard deviations."""
        return np.sqrt(np.diag(self.cov))

    def sample(self, n: int, seed: int, row: int = 0) -> np.ndarray:
        """n draws from the posterior of the given conditioning row."""
        rng = np.random.default_rng(seed)
        return rng.multivariate_normal(np.atleast_2d(self.mean)[row], self.cov, size=n)


def linear_gaussian_posterior(
    oracle: LinearGaussianOracle, x2: np.ndarray
) -> GaussianPosterior:
    """
    Closed-form Bayes posterior of X1 given X2 = x2.

    Sigma_post = (S0^-1 + A^T Se^-1 A)^-1 and
    m_post = Sigma_post (S0^-1 m0 + A^T Se^-1 x2).

    Raises:
        ValueError: If a covariance or the posterior precision is singular
    """
    x2 = np.asarray(x2, dtype=np.float64)
    rows = np.atleast_2d(x2)
    if rows.shape[1] != oracle.x2_dim:
        raise ShapeMismatchError(
            f"Observation has dimension {rows.shape[1]}, oracle expects {oracle.x2_dim}"
        )
    try:
        prior_precision = np.linalg.inv(oracle.prior_cov)
        noise_precision = np.linalg.inv(oracle.noise_cov)
        forward = oracle.forward
        precision = prior_precision + forward.T @ noise_precision @ forward
        cov = np.linalg.inv(precision)
    except np.linalg.LinAlgError as e:
        raise ValueError(f"Singular covariance in linear-Gaussian posterior: {e}")
    cov = 0.5 * (cov + cov.T)
    gain = oracle.forward.T @ noise_precision
    rhs = prior_precision @ oracle.prior_mean + rows @ gain.T
    mean = rhs @ cov.T
    return GaussianPosterior(mean=mean[0] if x2.ndim == 1 else mean, cov=cov)


@dataclass
class AffineMap:
    """x -> T x + b acting on rows of an (n, d) array."""

    matrix: np.ndarray
    offset: np.ndarray

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=np.float64) @ self.matrix.T + self.offset

    def inverse(self) -> "AffineMap":
        inv = np.linalg.inv(self.matrix)
        return AffineMap(matrix=inv, offset=-inv @ self.offset)

    def compose(self, inner: "AffineMap") -> "AffineMap":
        """self after inner."""
        return AffineMap(
            matrix=self.matrix @ inner.matrix,
            offset=self.matrix @ inner.offset + self.offset,
        )

    def transport_cost(self, x: np.ndarray) -> float:
        """Monte-Carlo E||x - T(x)||^2 over the rows of x."""
        x = np.asarray(x, dtype=np.float64)
        return float(np.mean(np.sum((x - self(x)) ** 2, axis=1)))


def _spd_sqrt(matrix: np.ndarray) -> np.ndarray:
    root = np.real(sqrtm(matrix))
    return 0.5 * (root + root.T)


def _require_spd(matrix: np.ndarray, name: str) -> np.ndarray:
    matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    if matrix.shape[0] != matrix.shape[1] or not np.allclose(matrix, matrix.T):
        raise ValueError(f"{name} must be a symmetric matrix")
    try:
        np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError:
        raise ValueError(f"{name} must be positive definite")
    return matrix


def gaussian_monge_map(
    mean1: np.ndarray, cov1: np.ndarray, mean2: np.ndarray, cov2: np.ndarray
) -> AffineMap:
    """
    Optimal transport map from N(m1, S1) to N(m2, S2) for the squared cost.

    T = S1^-1/2 (S1^1/2 S2 S1^1/2)^1/2 S1^-1/2 and b = m2 - T m1.
    """
    cov1 = _require_spd(cov1, "cov1")
    cov2 = _require_spd(cov2, "cov2")
    mean1 = np.asarray(mean1, dtype=np.float64).ravel()
    mean2 = np.asarray(mean2, dtype=np.float64).ravel()
    if cov1.shape != cov2.shape or mean1.shape != mean2.shape:
        raise ShapeMismatchError("Source and target Gaussians differ in dimension")
    if mean1.shape[0] != cov1.shape[0]:
        raise ShapeMismatchError("Mean and covariance dimensions differ")

    root1 = _spd_sqrt(cov1)
    root1_inv = np.linalg.inv(root1)
    middle = _spd_sqrt(root1 @ cov2 @ root1)
    matrix = root1_inv @ middle @ root1_inv
    matrix = 0.5 * (matrix + matrix.T)
    return AffineMap(matrix=matrix, offset=mean2 - matrix @ mean1)


def monge_map_for(pair: GaussianPair) -> AffineMap:
    return gaussian_monge_map(pair.mean1, pair.cov1, pair.mean2, pair.cov2)


def _load_image_folder(folder: Path, shape: Tuple[int, ...]) -> np.ndarray:
    """Images of a folder resized to (channels, height, width) in [0, 1]."""
    from PIL import Image

    channels, height, width = shape
    mode = "L" if channels == 1 else "RGB"
    files = sorted(
        p for p in folder.iterdir() if p.suffix.lower() in (".png", ".jpg", ".jpeg")
    )
    if not files:
        raise FileNotFoundError(f"No images found in {folder}")
    images = []
    for path in files:
        with Image.open(path) as image:
            resized = image.convert(mode).resize((width, height), Image.BILINEAR)
            array = np.asarray(resized, dtype=np.float32) / 255.0
        images.append(array[None] if channels == 1 else array.transpose(2, 0, 1))
    return np.stack(images)


def make_translation_datasets(
    spec: TaskSpec,
    n: int,
    seed: int,
    data_shape: Optional[Tuple[int, ...]] = None,
    train: bool = True,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Unpaired samples of mu1 and mu2.

    The two sets come from independent generator streams and independent
    shuffles, so row i of one set carries no information about row i of the
    other.
    """
    if spec.kind != TaskKind.TRANSLATION:
        raise ConfigurationError(f"Task {spec.label} is not a translation task")
    stream1, stream2 = np.random.SeedSequence(seed).spawn(2)
    rng1, rng2 = np.random.default_rng(stream1), np.random.default_rng(stream2)

    if spec.source == DataSource.GAUSSIAN_TRANSLATION:
        assert spec.gaussian_pair is not None
        pair = spec.gaussian_pair
        x1 = rng1.multivariate_normal(pair.mean1, pair.cov1, size=n)
        x2 = rng2.multivariate_normal(pair.mean2, pair.cov2, size=n)
        return x1.astype(np.float32), x2.astype(np.float32)

    if spec.source == DataSource.MNIST_DIGITS:
        if spec.data_dir is None:
            raise ConfigurationError("mnist_digits source needs data_dir")
        images, labels = load_mnist(spec.data_dir, train=train)
        sets = []
        for group, rng in zip(spec.digits, (rng1, rng2)):
            selected = images[np.isin(labels, list(group))]
            order = rng.permutation(len(selected))[:n]
            sets.append(selected[order])
        return sets[0], sets[1]

    if spec.source == DataSource.IMAGE_FOLDER:
        if data_shape is None:
            raise ConfigurationError("image_folder source needs the model data shape")
        sets = []
        for folder, rng in zip(spec.image_dirs, (rng1, rng2)):
            images = _load_image_folder(Path(folder), data_shape)
            order = rng.permutation(len(images))[:n]
            sets.append(images[order])
        return sets[0], sets[1]

    raise ConfigurationError(f"Source {spec.source.value} has no translation datasets")


@dataclass
class DatasetBundle:
    """Train and test samples of one task."""

    train_x1: np.ndarray
    train_x2: np.ndarray
    test_x1: np.ndarray
    test_x2: np.ndarray
    paired: bool
    mask: Optional[np.ndarray] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def n_train(self) -> int:
        return int(self.train_x1.shape[0])

    @property
    def n_test(self) -> int:
        return int(self.test_x1.shape[0])


def _observe_shard(
    kind: str,
    clean: np.ndarray,
    mask: Optional[np.ndarray],
    noise_std: float,
    seed: int,
) -> np.ndarray:
    """Worker job: observations of one shard of clean images."""
    if kind == TaskKind.INPAINTING.value:
        assert mask is not None
        return make_inpainting_pair(clean, mask, noise_std, seed)[1]
    return make_denoising_pair(clean, noise_std, seed)[1]


class DatasetBuilder:
    """
    Generates the datasets of a task.

    Observations are produced in fixed shards of SHARD_SIZE samples whose
    noise seeds derive from (seed, shard index), so the result is the same
    for any number of workers.
    """

    def __init__(self, max_workers: Optional[int] = None) -> None:
        self._logger = get_logger(__name__)
        self._max_workers = max_workers

    @property
    def max_workers(self) -> int:
        if self._max_workers is None:
            manager = SystemResourceManager(self._logger)
            self._max_workers = manager.calculate_optimal_workers(
                bytes_per_worker=64 * 1024**2
            )
        return self._max_workers

    def observe(
        self,
        kind: TaskKind,
        clean: np.ndarray,
        noise_std: float,
        seed: int,
        mask: Optional[np.ndarray] = None,
    ) -> np.ndarray:
        """Noisy (and masked) observations of clean images, shard by shard."""
        starts = list(range(0, len(clean), SHARD_SIZE))
        shard_seeds = np.random.SeedSequence(seed).spawn(len(starts))
        seeds = [int(s.generate_state(1)[0]) for s in shard_seeds]
        results: List[Optional[np.ndarray]] = [None] * len(starts)

        workers = min(self.max_workers, len(starts))
        if workers <= 1:
            for i, start in enumerate(starts):
                shard = clean[start : start + SHARD_SIZE]
                results[i] = _observe_shard(
                    kind.value, shard, mask, noise_std, seeds[i]
                )
        else:
            self._logger.debug(
                f"Generating {len(starts)} observation shards with {workers} workers"
            )
            with ProcessPoolExecutor(max_workers=workers) as executor:
                futures = {
                    executor.submit(
                        _observe_shard,
                        kind.value,
                        clean[start : start + SHARD_SIZE],
                        mask,
                        noise_std,
                        seeds[i],
                    ): i
                    for i, start in enumerate(starts)
                }
                for future in as_completed(futures):
                    results[futures[future]] = future.result()
        return np.concatenate([r for r in results if r is not None])

    def build(
        self, task: TaskSpec, seed: int, data_shape: Optional[Tuple[int, ...]] = None
    ) -> DatasetBundle:
        """
        Build train and test sets; train and test use disjoint seed streams.

        Args:
            task: Task definition
            seed: Run seed
            data_shape: Model data shape (needed by image-folder sources)
        """
        train_seed, test_seed = (
            int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(2)
        )
        self._logger.info(
            f"Building datasets for {task.label} "
            f"({task.n_train} train / {task.n_test} test)"
        )

        if task.kind == TaskKind.TRANSLATION:
            train_x1, train_x2 = make_translation_datasets(
                task, task.n_train, train_seed, data_shape, train=True
            )
            test_x1, test_x2 = make_translation_datasets(
                task, task.n_test, test_seed, data_shape, train=False
            )
            return DatasetBundle(
                train_x1=train_x1,
                train_x2=train_x2,
                test_x1=test_x1,
                test_x2=test_x2,
                paired=False,
                metadata={"source": task.source.value},
            )

        if task.source == DataSource.LINEAR_GAUSSIAN:
            assert task.linear_gaussian is not None
            train_x1, train_x2 = make_linear_gaussian_pairs(
                task.linear_gaussian, task.n_train, train_seed
            )
            test_x1, test_x2 = make_linear_gaussian_pairs(
                task.linear_gaussian, task.n_test, test_seed
            )
            return DatasetBundle(
                train_x1=train_x1,
                train_x2=train_x2,
                test_x1=test_x1,
                test_x2=test_x2,
                paired=True,
                metadata={"source": task.source.value},
            )

        if task.data_dir is None:
            raise ConfigurationError(
                f"{task.label} needs data_dir with MNIST IDX files"
            )
        train_clean, _ = load_mnist(task.data_dir, train=True)
        test_clean, _ = load_mnist(task.data_dir, train=False)
        train_clean = train_clean[: task.n_train]
        test_clean = test_clean[: task.n_test]

        mask = None
        if task.kind == TaskKind.INPAINTING:
            mask = task.mask
            if mask is None:
                mask = left_half_mask(train_clean.shape[1:])
        assert task.noise_std is not None
        noise_std = task.noise_std
        train_x2 = self.observe(task.kind, train_clean, noise_std, train_seed, mask)
        test_x2 = self.observe(task.kind, test_clean, noise_std, test_seed, mask)
        return DatasetBundle(
            train_x1=train_clean,
            train_x2=train_x2,
            test_x1=test_clean,
            test_x2=test_x2,
            paired=True,
            mask=mask,
            metadata={"source": task.source.value},
        )


def build_datasets(
    task: TaskSpec,
    seed: int,
    data_shape: Optional[Tuple[int, ...]] = None,
    max_workers: Optional[int] = None,
) -> DatasetBundle:
    """Convenience wrapper around :class:`DatasetBuilder`."""
    return DatasetBuilder(max_workers).build(task, seed, data_shape)
