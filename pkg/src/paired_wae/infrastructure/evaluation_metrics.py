"""Metrics comparing trained models against data and analytic oracles."""

import math
from typing import Union

import numpy as np
import torch

from ..domain.entities.measures import EmpiricalMeasure
from .divergences import exact_wasserstein, sinkhorn_divergence

# Calibrated thresholds of the desk-scale experiments
SAME_DISTRIBUTION_FLOOR = 0.1
LINEAR_GAUSSIAN_W2_THRESHOLD = 0.35
POINT_ESTIMATE_THRESHOLD = 0.3
STD_RELATIVE_TOLERANCE = 0.3
TRANSPORT_COST_TOLERANCE = 0.15
DIRECTION_TOLERANCE_DEGREES = 10.0
PSNR_GAIN_DB = 3.0
INPAINTING_FLOOR_FACTOR = 2.0
CROSS_BLOCK_CORRELATION_MAX = 0.2
LATENT_FLOOR_FACTOR = 3.0

Array = Union[np.ndarray, torch.Tensor]


def _numpy(x: Array) -> np.ndarray:
    if isinstance(x, torch.Tensor):
        return x.detach().cpu().to(torch.float64).numpy()
    return np.asarray(x, dtype=np.float64)


def psnr(reference: Array, estimate: Array, data_range: float = 1.0) -> float:
    """Mean over images of 10 log10(range^2 / MSE)."""
    ref, est = _numpy(reference), _numpy(estimate)
    if ref.shape != est.shape:
        raise ValueError(f"Shapes differ: {ref.shape} vs {est.shape}")
    ref = ref.reshape(ref.shape[0], -1)
    est = est.reshape(est.shape[0], -1)
    mse = np.maximum(np.mean((ref - est) ** 2, axis=1), 1e-12)
    return float(np.mean(10.0 * np.log10(data_range**2 / mse)))


def w2_distance(samples: Array, reference: Array) -> float:
    """Exact W2 between two uniform sample sets (square root of W2^2)."""
    x = torch.from_numpy(_numpy(samples).reshape(len(samples), -1))
    y = torch.from_numpy(_numpy(reference).reshape(len(reference), -1))
    value = exact_wasserstein(
        EmpiricalMeasure.uniform(x), EmpiricalMeasure.uniform(y), 2.0
    )
    return math.sqrt(value)


def relative_std_error(estimated_std: Array, reference_std: Array) -> float:
    """Largest |s_hat - s| / s over coordinates."""
    est, ref = _numpy(estimated_std).ravel(), _numpy(reference_std).ravel()
    return float(np.max(np.abs(est - ref) / np.maximum(ref, 1e-12)))


def latent_match(codes: Array, prior_sample: Array, epsilon: float = 0.05) -> float:
    """Debiased Sinkhorn divergence between encoded codes and a prior sample."""
    x = torch.from_numpy(_numpy(codes))
    y = torch.from_numpy(_numpy(prior_sample))
    result = sinkhorn_divergence(
        EmpiricalMeasure.uniform(x), EmpiricalMeasure.uniform(y), epsilon=epsilon
    )
    return result.item()


def cross_block_correlation(block_a: Array, block_b: Array) -> float:
    """Mean absolute Pearson correlation between coordinates of two blocks."""
    a, b = _numpy(block_a), _numpy(block_b)
    if a.shape[1] == 0 or b.shape[1] == 0:
        return 0.0
    corr = np.corrcoef(a, b, rowvar=False)
    cross = corr[: a.shape[1], a.shape[1] :]
    return float(np.nanmean(np.abs(cross)))


def transport_cost(source: Array, mapped: Array) -> float:
    """Mean squared displacement E||x - T(x)||^2."""
    x, y = _numpy(source), _numpy(mapped)
    return float(np.mean(np.sum((x - y).reshape(len(x), -1) ** 2, axis=1)))


def displacement_angle(source: Array, mapped: Array, reference_mapped: Array) -> float:
    """Angle in degrees between the mean displacements of two maps."""
    x = _numpy(source).reshape(len(source), -1)
    learned = np.mean(_numpy(mapped).reshape(len(x), -1) - x, axis=0)
    oracle = np.mean(_numpy(reference_mapped).reshape(len(x), -1) - x, axis=0)
    norms = np.linalg.norm(learned) * np.linalg.norm(oracle)
    if norms < 1e-12:
        return 0.0 if np.linalg.norm(learned - oracle) < 1e-6 else 90.0
    cosine = np.clip(np.dot(learned, oracle) / norms, -1.0, 1.0)
    return float(np.degrees(np.arccos(cosine)))


def cycle_error(source: Array, cycled: Array, reconstructed: Array) -> float:
    """E||T^-1(T(x)) - D1(E1(x))|| relative to E||x||."""
    x = _numpy(source).reshape(len(source), -1)
    diff = (_numpy(cycled) - _numpy(reconstructed)).reshape(len(x), -1)
    scale = max(float(np.mean(np.linalg.norm(x, axis=1))), 1e-12)
    return float(np.mean(np.linalg.norm(diff, axis=1))) / scale


def masked_residual(mask: Array, observation: Array, prediction: Array) -> float:
    """
    Mean absolute residual over the observed (mask = 1) entries of
    M * (x2 - x2_hat), averaged over images.
    """
    m = _numpy(mask)
    obs, pred = _numpy(observation), _numpy(prediction)
    m = np.broadcast_to(m, obs.shape)
    weight = m.reshape(len(obs), -1).sum(axis=1)
    residual = np.abs(m * (obs - pred)).reshape(len(obs), -1).sum(axis=1)
    return float(np.mean(residual / np.maximum(weight, 1e-12)))


def std_coverage(std_image: Array, tolerance: float = 0.0) -> float:
    """Fraction of entries whose standard deviation is strictly above tolerance."""
    std = _numpy(std_image)
    return float(np.mean(std > tolerance))
