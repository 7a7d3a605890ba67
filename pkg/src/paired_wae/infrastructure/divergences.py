"""Divergences between empirical measures.

Exact W_p through assignment or a small linear program, 1D W_p by order
statistics, the debiased log-domain Sinkhorn divergence, sliced Wasserstein
and Gaussian-kernel MMD. All functions are pure in their inputs.
"""

from typing import Optional, Sequence, Tuple, Union

import numpy as np
import torch
from scipy.linalg import sqrtm
from scipy.optimize import linear_sum_assignment, linprog

from ..domain.entities.measures import (
    CostMatrix,
    DivergenceKind,
    DivergenceResult,
    EmpiricalMeasure,
)
from ..domain.entities.training import (
    DivergenceSettings,
    MmdSettings,
    SinkhornSettings,
    SlicedSettings,
)
from ..domain.exceptions import ShapeMismatchError
from .logger import get_logger

ArrayLike = Union[torch.Tensor, np.ndarray, Sequence[float]]


def _check_dims(mu: EmpiricalMeasure, nu: EmpiricalMeasure) -> None:
    if mu.dim != nu.dim:
        raise ShapeMismatchError(
            f"Measures live in different dimensions: {mu.dim} vs {nu.dim}"
        )


def cost_matrix(x: torch.Tensor, y: torch.Tensor, p: float = 2.0) -> CostMatrix:
    """
    Pairwise costs C[i, j] = ||x_i - y_j||_p^p.

    Args:
        x: Points of shape (n, d)
        y: Points of shape (m, d)
        p: Exponent, at least 1

    Returns:
        CostMatrix, differentiable with respect to both point sets
    """
    if p < 1:
        raise ValueError(f"p must be at least 1, got {p}")
    if x.shape[-1] != y.shape[-1]:
        raise ShapeMismatchError(
            f"Point dimensions differ: {x.shape[-1]} vs {y.shape[-1]}"
        )
    diff = x[:, None, :] - y[None, :, :]
    if p == 2:
        entries = (diff * diff).sum(dim=-1)
    else:
        entries = diff.abs().pow(p).sum(dim=-1)
    return CostMatrix(entries=entries, p=p)


def exact_wasserstein(
    mu: EmpiricalMeasure, nu: EmpiricalMeasure, p: float = 2.0
) -> float:
    """
    W_p^p between two empirical measures.

    Uniform measures of equal size are solved as an assignment problem; any
    other weights go through a dense linear program over couplings.

    Returns:
        The minimal expected cost, i.e. W_p raised to the power p
    """
    _check_dims(mu, nu)
    cost = cost_matrix(
        mu.points.detach().to(torch.float64).cpu(),
        nu.points.detach().to(torch.float64).cpu(),
        p,
    ).entries.numpy()

    if mu.size == nu.size and mu.is_uniform and nu.is_uniform:
        rows, cols = linear_sum_assignment(cost)
        return float(cost[rows, cols].mean())

    a = mu.weights.detach().to(torch.float64).cpu().numpy()
    b = nu.weights.detach().to(torch.float64).cpu().numpy()
    n, m = cost.shape
    # Row-sum and column-sum constraints on the flattened coupling.
    a_eq = np.zeros((n + m, n * m))
    for i in range(n):
        a_eq[i, i * m : (i + 1) * m] = 1.0
    for j in range(m):
        a_eq[n + j, j::m] = 1.0
    b_eq = np.concatenate([a, b])
    result = linprog(
        cost.ravel(), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs"
    )
    if not result.success:
        raise RuntimeError(f"Transport linear program failed: {result.message}")
    return float(max(result.fun, 0.0))


def wasserstein_1d(xs: ArrayLike, ys: ArrayLike, p: float = 2.0) -> torch.Tensor:
    """
    W_p^p between two uniform 1D samples of equal size by pairing order statistics.
    """
    x = torch.as_tensor(xs).reshape(-1)
    y = torch.as_tensor(ys).reshape(-1)
    if x.shape[0] != y.shape[0]:
        raise ShapeMismatchError(
            f"1D samples must have equal length: {x.shape[0]} vs {y.shape[0]}"
        )
    if x.shape[0] == 0:
        raise ValueError("1D samples must not be empty")
    if p < 1:
        raise ValueError(f"p must be at least 1, got {p}")
    x_sorted, _ = torch.sort(x)
    y_sorted, _ = torch.sort(y.to(x.dtype))
    return (x_sorted - y_sorted).abs().pow(p).mean()


def _plan(
    log_a: torch.Tensor,
    log_b: torch.Tensor,
    f: torch.Tensor,
    g: torch.Tensor,
    cost: torch.Tensor,
    epsilon: float,
) -> torch.Tensor:
    """Transport plan of the potentials (f, g)."""
    log_plan = log_a[:, None] + log_b[None, :]
    return (log_plan + (f[:, None] + g[None, :] - cost) / epsilon).exp()


def _sinkhorn_potentials(
    log_a: torch.Tensor,
    log_b: torch.Tensor,
    cost: torch.Tensor,
    epsilon: float,
    max_iters: int,
    tol: float,
) -> Tuple[torch.Tensor, torch.Tensor, int, float, bool]:
    """Log-domain Sinkhorn iterations on detached inputs."""
    f = torch.zeros_like(log_a)
    g = torch.zeros_like(log_b)
    a = log_a.exp()
    error = float("inf")
    for iteration in range(1, max_iters + 1):
        f = -epsilon * torch.logsumexp(
            log_b[None, :] + (g[None, :] - cost) / epsilon, 1
        )
        g = -epsilon * torch.logsumexp(
            log_a[:, None] + (f[:, None] - cost) / epsilon, 0
        )
        # Columns are exact after the g-update; rows measure the violation.
        plan = _plan(log_a, log_b, f, g, cost, epsilon)
        error = float((plan.sum(dim=1) - a).abs().sum())
        if error < tol:
            return f, g, iteration, error, True
    return f, g, max_iters, error, False


def entropic_transport(
    mu: EmpiricalMeasure,
    nu: EmpiricalMeasure,
    epsilon: float,
    max_iters: int = 500,
    tol: float = 1e-6,
    cost: Optional[torch.Tensor] = None,
) -> DivergenceResult:
    """
    Entropy-regularized transport cost OT_eps(mu, nu) with squared-Euclidean cost.

    The returned value carries the envelope gradient sum_ij pi_ij grad C_ij,
    so it is differentiable in the point coordinates without unrolling the
    iterations.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if cost is None:
        cost = cost_matrix(mu.points, nu.points, 2.0).entries
    if not bool(torch.isfinite(cost.detach()).all()):
        raise ValueError("Cost matrix contains non-finite entries")

    cost_detached = cost.detach()
    log_a = mu.weights.detach().to(dtype=cost.dtype, device=cost.device).log()
    log_b = nu.weights.detach().to(dtype=cost.dtype, device=cost.device).log()
    with torch.no_grad():
        f, g, iterations, error, converged = _sinkhorn_potentials(
            log_a, log_b, cost_detached, epsilon, max_iters, tol
        )
        plan = _plan(log_a, log_b, f, g, cost_detached, epsilon)
        dual_value = (log_a.exp() * f).sum() + (log_b.exp() * g).sum()

    value = dual_value + (plan * (cost - cost_detached)).sum()
    return DivergenceResult(
        value=value,
        converged=converged,
        iterations=iterations,
        marginal_error=error,
    )


def sinkhorn_divergence(
    mu: EmpiricalMeasure,
    nu: EmpiricalMeasure,
    epsilon: float = 0.05,
    max_iters: int = 500,
    tol: float = 1e-6,
    relative: bool = True,
) -> DivergenceResult:
    """
    Debiased Sinkhorn divergence
    S_eps(mu, nu) = OT_eps(mu, nu) - OT_eps(mu, mu) / 2 - OT_eps(nu, nu) / 2.

    Args:
        mu: First measure
        nu: Second measure
        epsilon: Regularization; a fraction of the mean cost of (mu, nu) when
            ``relative`` is True
        max_iters: Iteration cap of each of the three transport problems
        tol: L1 tolerance on the row-marginal violation
        relative: Whether epsilon is relative to the mean cost

    Returns:
        DivergenceResult whose value is differentiable in both point sets;
        ``converged`` is False when any of the three problems hit max_iters.
    """
    _check_dims(mu, nu)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")

    cost_xy = cost_matrix(mu.points, nu.points, 2.0)
    scale = cost_xy.mean if relative else 1.0
    eps = epsilon * scale if scale > 0 else epsilon

    xy = entropic_transport(mu, nu, eps, max_iters, tol, cost=cost_xy.entries)
    xx = entropic_transport(mu, mu, eps, max_iters, tol)
    yy = entropic_transport(nu, nu, eps, max_iters, tol)

    value = xy.value - 0.5 * xx.value - 0.5 * yy.value
    converged = xy.converged and xx.converged and yy.converged
    result = DivergenceResult(
        value=value,
        converged=converged,
        iterations=max(xy.iterations, xx.iterations, yy.iterations),
        marginal_error=max(xy.marginal_error, xx.marginal_error, yy.marginal_error),
    )
    if not converged:
        result.message = (
            f"Sinkhorn did not converge within {max_iters} iterations "
            f"(marginal error {result.marginal_error:.3e}, eps {eps:.3e})"
        )
        get_logger(__name__).warning(result.message)
    return result


def random_projections(
    n_projections: int, dim: int, seed: int, dtype: torch.dtype = torch.float32
) -> torch.Tensor:
    """Uniform random unit vectors of shape (n_projections, dim)."""
    if n_projections < 1:
        raise ValueError("n_projections must be at least 1")
    generator = torch.Generator().manual_seed(seed)
    directions = torch.randn(
        n_projections, dim, generator=generator, dtype=torch.float64
    )
    directions = directions / directions.norm(dim=1, keepdim=True).clamp_min(1e-12)
    return directions.to(dtype)


def sliced_wasserstein(
    mu: EmpiricalMeasure,
    nu: EmpiricalMeasure,
    n_projections: int = 100,
    p: float = 2.0,
    seed: int = 0,
) -> torch.Tensor:
    """
    Average of 1D W_p^p over random unit-vector projections.

    Both measures must be uniform with the same number of points.
    """
    _check_dims(mu, nu)
    if mu.size != nu.size or not (mu.is_uniform and nu.is_uniform):
        raise ValueError("Sliced Wasserstein needs uniform measures of equal size")
    if p < 1:
        raise ValueError(f"p must be at least 1, got {p}")
    projections = random_projections(n_projections, mu.dim, seed, mu.points.dtype)
    projections = projections.to(mu.points.device)
    x_proj, _ = torch.sort(mu.points @ projections.T, dim=0)
    y_proj, _ = torch.sort(nu.points.to(mu.points.dtype) @ projections.T, dim=0)
    return (x_proj - y_proj).abs().pow(p).mean()


def median_bandwidth(x: torch.Tensor, y: torch.Tensor) -> float:
    """Median pairwise distance of the pooled sample."""
    pooled = torch.cat([x, y.to(x.dtype)], dim=0).detach()
    distances = torch.cdist(pooled, pooled)
    upper = distances[torch.triu(torch.ones_like(distances, dtype=torch.bool), 1)]
    median = float(upper.median()) if upper.numel() else 0.0
    return median if median > 0 else 1.0


def mmd(
    mu: EmpiricalMeasure,
    nu: EmpiricalMeasure,
    bandwidth: Optional[float] = None,
    unbiased: bool = True,
) -> torch.Tensor:
    """
    Squared maximum mean discrepancy with the Gaussian kernel
    k(x, y) = exp(-||x - y||^2 / (2 h^2)).

    Args:
        mu: First sample
        nu: Second sample
        bandwidth: Kernel bandwidth h; the median heuristic when None
        unbiased: Drop the diagonal kernel terms (U-statistic)

    Returns:
        MMD^2 estimate; the unbiased estimator can be slightly negative
    """
    _check_dims(mu, nu)
    if unbiased and (mu.size < 2 or nu.size < 2):
        raise ValueError("Unbiased MMD needs at least two points in each measure")
    if bandwidth is None:
        bandwidth = median_bandwidth(mu.points, nu.points)
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")

    x = mu.points
    y = nu.points.to(x.dtype)
    scale = 2.0 * bandwidth**2
    k_xx = torch.exp(-cost_matrix(x, x, 2.0).entries / scale)
    k_yy = torch.exp(-cost_matrix(y, y, 2.0).entries / scale)
    k_xy = torch.exp(-cost_matrix(x, y, 2.0).entries / scale)

    if unbiased:
        m, n = mu.size, nu.size
        term_xx = (k_xx.sum() - k_xx.diagonal().sum()) / (m * (m - 1))
        term_yy = (k_yy.sum() - k_yy.diagonal().sum()) / (n * (n - 1))
        return term_xx + term_yy - 2.0 * k_xy.mean()

    a = mu.weights_like_points()
    b = nu.weights_like_points().to(x.dtype)
    return a @ k_xx @ a + b @ k_yy @ b - 2.0 * a @ k_xy @ b


def compute_divergence(
    mu: EmpiricalMeasure,
    nu: EmpiricalMeasure,
    settings: DivergenceSettings,
    seed: int = 0,
) -> DivergenceResult:
    """Dispatch to the divergence selected in the settings."""
    if settings.kind == DivergenceKind.SINKHORN:
        sink: SinkhornSettings = settings.sinkhorn
        return sinkhorn_divergence(
            mu, nu, sink.epsilon, sink.max_iters, sink.tol, sink.relative
        )
    if settings.kind == DivergenceKind.SLICED:
        sliced: SlicedSettings = settings.sliced
        value = sliced_wasserstein(mu, nu, sliced.n_projections, sliced.p, seed)
        return DivergenceResult(value=value)
    mmd_settings: MmdSettings = settings.mmd
    return DivergenceResult(value=mmd(mu, nu, mmd_settings.bandwidth))


def gaussian_w2_squared(
    mean1: np.ndarray, cov1: np.ndarray, mean2: np.ndarray, cov2: np.ndarray
) -> float:
    """
    Closed-form W2^2 between N(m1, S1) and N(m2, S2):
    ||m1 - m2||^2 + tr(S1 + S2 - 2 (S2^1/2 S1 S2^1/2)^1/2).
    """
    mean1 = np.asarray(mean1, dtype=np.float64).ravel()
    mean2 = np.asarray(mean2, dtype=np.float64).ravel()
    cov1 = np.atleast_2d(np.asarray(cov1, dtype=np.float64))
    cov2 = np.atleast_2d(np.asarray(cov2, dtype=np.float64))
    root2 = np.real(sqrtm(cov2))
    cross = np.real(sqrtm(root2 @ cov1 @ root2))
    value = float(np.sum((mean1 - mean2) ** 2) + np.trace(cov1 + cov2 - 2.0 * cross))
    return max(value, 0.0)
