"""Tests for the training loss."""

import numpy as np
import pytest
import torch

from paired_wae.domain.entities.architecture import dense_toy
from paired_wae.domain.entities.latent import LatentCode, LatentSplit
from paired_wae.domain.entities.measures import DivergenceKind
from paired_wae.domain.entities.tasks import (
    DataSource,
    GaussianPair,
    LinearGaussianOracle,
    TaskKind,
    TaskSpec,
)
from paired_wae.domain.entities.training import (
    DivergenceSettings,
    SinkhornSettings,
    TrainConfig,
)
from paired_wae.domain.exceptions import ConfigurationError, ShapeMismatchError
from paired_wae.infrastructure.divergences import gaussian_w2_squared
from paired_wae.infrastructure.latent_prior import sample_prior
from paired_wae.infrastructure.networks import PairedModel, build_model
from paired_wae.infrastructure.objective import (
    PairedBatch,
    data_fidelity_denoising,
    data_fidelity_inpainting,
    data_fidelity_translation,
    latent_divergence_term,
    reconstruction_term,
    task_mask,
    total_loss,
)
from paired_wae.infrastructure.tasks import AffineMap, gaussian_monge_map

LINEAR_TASK = TaskSpec(
    kind=TaskKind.DENOISING,
    source=DataSource.LINEAR_GAUSSIAN,
    linear_gaussian=LinearGaussianOracle.isotropic_denoising(dim=2, noise_std=0.5),
    n_train=32,
    n_test=8,
)
EXACT_SINKHORN = DivergenceSettings(
    kind=DivergenceKind.SINKHORN,
    sinkhorn=SinkhornSettings(epsilon=1.0, max_iters=10000, tol=1e-12, relative=False),
)


def _batch(n: int = 6, seed: int = 0) -> PairedBatch:
    rng = np.random.default_rng(seed)
    x1 = rng.standard_normal((n, 2))
    x2 = x1 + 0.5 * rng.standard_normal((n, 2))
    return PairedBatch(x1=torch.from_numpy(x1), x2=torch.from_numpy(x2))


def _whitened(n: int, seed: int) -> np.ndarray:
    """Standard normal rows with exactly zero mean and identity covariance."""
    z = np.random.default_rng(seed).standard_normal((n, 2))
    z -= z.mean(axis=0)
    root = np.linalg.cholesky(z.T @ z / n)
    return z @ np.linalg.inv(root).T


def _permuted(code: LatentCode, order: torch.Tensor) -> LatentCode:
    return LatentCode(z1=code.z1[order], z2=code.z2[order], z3=code.z3[order])


class _FixedCrossModel:
    """Cross reconstructions are fixed tensors, whatever the inputs."""

    def __init__(self, x1_hat: torch.Tensor, x2_hat: torch.Tensor) -> None:
        self.x1_hat = x1_hat
        self.x2_hat = x2_hat

    def cross_reconstruct_x1(self, z1: torch.Tensor, x2: torch.Tensor) -> torch.Tensor:
        return self.x1_hat

    def cross_reconstruct_x2(self, x1: torch.Tensor, z3: torch.Tensor) -> torch.Tensor:
        return self.x2_hat


class _AffineTranslator:
    """Translation model whose maps are given affine maps."""

    split = LatentSplit(0, 2, 0)

    def __init__(self, forward: AffineMap) -> None:
        self.forward = forward
        self.backward = forward.inverse()

    def translate(self, x1: torch.Tensor) -> torch.Tensor:
        return torch.from_numpy(self.forward(x1.numpy()))

    def translate_inverse(self, x2: torch.Tensor) -> torch.Tensor:
        return torch.from_numpy(self.backward(x2.numpy()))


ORDER = torch.tensor([3, 0, 5, 1, 4, 2])


class TestPairedBatch:
    """Test cases for PairedBatch."""

    def test_sizes_must_match(self) -> None:
        with pytest.raises(ShapeMismatchError):
            PairedBatch(x1=torch.zeros(3, 2), x2=torch.zeros(4, 2))

    def test_must_not_be_empty(self) -> None:
        with pytest.raises(ValueError):
            PairedBatch(x1=torch.zeros(0, 2), x2=torch.zeros(0, 2))


class TestLossTerms:
    """Test cases for the individual loss terms."""

    def test_reconstruction_is_zero_for_exact_autoencoder(
        self, toy_model: PairedModel
    ) -> None:
        batch = _batch()
        x1_hat = toy_model.decode1(*toy_model.encode1(batch.x1))
        x2_hat = toy_model.decode2(*toy_model.encode2(batch.x2))
        exact = PairedBatch(x1=x1_hat.detach(), x2=x2_hat.detach())
        recon = float(reconstruction_term(toy_model, exact))
        assert recon == pytest.approx(0.0, abs=1e-12)
        assert float(reconstruction_term(toy_model, batch)) > 0.0

    def test_divergence_needs_two_samples(self, toy_model: PairedModel) -> None:
        batch = _batch(n=1)
        prior = sample_prior(toy_model.split, 1, seed=0, dtype=torch.float64)
        with pytest.raises(ValueError, match="two samples"):
            latent_divergence_term(toy_model, batch, prior, EXACT_SINKHORN)

    def test_divergence_checks_prior_split(self, toy_model: PairedModel) -> None:
        prior = sample_prior(LatentSplit(1, 2, 3), 6, seed=0)
        with pytest.raises(ShapeMismatchError):
            latent_divergence_term(toy_model, _batch(), prior, EXACT_SINKHORN)

    def test_translation_fidelity_needs_shared_only_split(
        self, toy_model: PairedModel
    ) -> None:
        with pytest.raises(ConfigurationError):
            data_fidelity_translation(toy_model, _batch())

    def test_translation_fidelity_is_mean_transport_cost(self) -> None:
        model = build_model(dense_toy(2), LatentSplit(0, 2, 0), dtype=torch.float64)
        batch = PairedBatch(
            x1=torch.randn(5, 2, dtype=torch.float64),
            x2=torch.randn(5, 2, dtype=torch.float64),
            paired=False,
        )
        forward = ((batch.x1 - model.translate(batch.x1)) ** 2).sum(dim=1).mean()
        inverse = model.translate_inverse(batch.x2)
        backward = ((batch.x2 - inverse) ** 2).sum(dim=1).mean()
        value = data_fidelity_translation(model, batch)
        assert float(value) == pytest.approx(float(0.5 * (forward + backward)))

    def test_inpainting_fidelity_compares_observed_entries(
        self, toy_model: PairedModel
    ) -> None:
        batch = _batch()
        mask = torch.tensor([0.0, 1.0], dtype=torch.float64)
        z1 = torch.zeros(6, 2, dtype=torch.float64)
        z3 = torch.zeros(6, 2, dtype=torch.float64)
        value = data_fidelity_inpainting(toy_model, batch, mask, z1, z3)
        x1_hat = toy_model.cross_reconstruct_x1(z1, batch.x2)
        x2_hat = toy_model.cross_reconstruct_x2(batch.x1, z3)
        expected = (mask * (batch.x1 - x1_hat)).abs().mean(dim=1).mean() + (
            mask * (batch.x2 - x2_hat)
        ).abs().mean(dim=1).mean()
        assert float(value) == pytest.approx(float(expected), rel=1e-12)
        with pytest.raises(ShapeMismatchError):
            data_fidelity_inpainting(toy_model, batch, torch.ones(3), z1, z3)

    def test_paired_fidelity_refuses_unpaired_batch(
        self, toy_model: PairedModel
    ) -> None:
        batch = _batch()
        unpaired = PairedBatch(x1=batch.x1, x2=batch.x2, paired=False)
        config = TrainConfig(divergence=EXACT_SINKHORN, lambda1=0.0)
        with pytest.raises(ConfigurationError):
            total_loss(toy_model, unpaired, config, LINEAR_TASK)

    def test_default_mask_is_left_half(self) -> None:
        task = TaskSpec(kind=TaskKind.INPAINTING, source=DataSource.MNIST)
        mask = task_mask(task, (1, 28, 28))
        assert mask[0, 0, :14].sum() == 0
        assert mask[0, 0, 14:].sum() == 14


    def test_divergence_ignores_batch_order(self, toy_model: PairedModel) -> None:
        batch = _batch()
        shuffled = PairedBatch(x1=batch.x1[ORDER], x2=batch.x2[ORDER])
        prior = sample_prior(toy_model.split, 6, seed=0, dtype=torch.float64)
        value = latent_divergence_term(toy_model, batch, prior, EXACT_SINKHORN)
        again = latent_divergence_term(toy_model, shuffled, prior, EXACT_SINKHORN)
        assert again.item() == pytest.approx(value.item(), rel=1e-9)

    def test_denoising_fidelity_is_zero_for_exact_cross_reconstruction(self) -> None:
        batch = _batch()
        model = _FixedCrossModel(batch.x1, batch.x2)
        z = torch.zeros(6, 2, dtype=torch.float64)
        assert float(data_fidelity_denoising(model, batch, z, z)) == 0.0

    def test_denoising_fidelity_of_zero_cross_reconstruction(self) -> None:
        x1 = torch.tensor([[1.0, 2.0, 3.0, 4.0], [0.0, 1.0, 0.0, 1.0]])
        batch = PairedBatch(x1=x1, x2=0.5 * x1)
        model = _FixedCrossModel(torch.zeros_like(x1), torch.zeros_like(x1))
        z = torch.zeros(2, 2)
        # Squares are averaged over entries, then over the batch:
        # x1 gives (7.5 + 0.5) / 2 and x2 a quarter of that.
        value = data_fidelity_denoising(model, batch, z, z)
        assert float(value) == pytest.approx(5.0)

    def test_inpainting_fidelity_with_empty_mask(self, toy_model: PairedModel) -> None:
        z = torch.zeros(6, 2, dtype=torch.float64)
        mask = torch.zeros(2, dtype=torch.float64)
        value = data_fidelity_inpainting(toy_model, _batch(), mask, z, z)
        assert float(value) == 0.0

    def test_inpainting_fidelity_with_half_mask(self) -> None:
        constant = torch.full((3, 4), 2.0, dtype=torch.float64)
        batch = PairedBatch(x1=constant, x2=constant.clone())
        zeros = torch.zeros_like(constant)
        model = _FixedCrossModel(zeros, zeros)
        z = torch.zeros(3, 2, dtype=torch.float64)
        half = torch.tensor([0.0, 0.0, 1.0, 1.0], dtype=torch.float64)
        full = torch.ones(4, dtype=torch.float64)
        unmasked = float(data_fidelity_inpainting(model, batch, full, z, z))
        masked = float(data_fidelity_inpainting(model, batch, half, z, z))
        assert unmasked == pytest.approx(4.0)
        assert masked == pytest.approx(0.5 * unmasked)

    def test_translation_fidelity_at_monge_map_is_w2(self) -> None:
        mean1, cov1 = np.zeros(2), np.array([[1.0, 0.3], [0.3, 0.5]])
        mean2, cov2 = np.array([2.0, -1.0]), np.array([[2.0, -0.4], [-0.4, 1.0]])
        monge = gaussian_monge_map(mean1, cov1, mean2, cov2)
        # Exact sample moments, so the empirical cost is the population cost.
        x1 = mean1 + _whitened(512, seed=0) @ np.linalg.cholesky(cov1).T
        batch = PairedBatch(
            x1=torch.from_numpy(x1), x2=torch.from_numpy(monge(x1)), paired=False
        )
        value = float(data_fidelity_translation(_AffineTranslator(monge), batch))
        expected = gaussian_w2_squared(mean1, cov1, mean2, cov2)
        assert value == pytest.approx(expected, rel=1e-6)

    def test_translation_fidelity_penalizes_swapped_modes(self) -> None:
        rng = np.random.default_rng(1)
        modes = np.repeat([[-3.0, 0.0], [3.0, 0.0]], 100, axis=0)
        x1 = modes + 0.3 * rng.standard_normal((200, 2))
        shift = AffineMap(matrix=np.eye(2), offset=np.array([0.0, 1.0]))
        # Maps each mode onto the opposite one; also pushes X1 onto X2.
        swap = AffineMap(matrix=np.diag([-1.0, 1.0]), offset=np.array([0.0, 1.0]))
        batch = PairedBatch(
            x1=torch.from_numpy(x1), x2=torch.from_numpy(shift(x1)), paired=False
        )
        optimal = float(data_fidelity_translation(_AffineTranslator(shift), batch))
        swapped = float(data_fidelity_translation(_AffineTranslator(swap), batch))
        assert optimal == pytest.approx(1.0)
        assert swapped > optimal + 30.0


class TestTotalLoss:
    """Test cases for the full objective."""

    def test_zero_weights_leave_reconstruction(self, toy_model: PairedModel) -> None:
        batch = _batch()
        config = TrainConfig(lambda1=0.0, lambda2=0.0, divergence=EXACT_SINKHORN)
        losses = total_loss(toy_model, batch, config, LINEAR_TASK)
        recon = reconstruction_term(toy_model, batch)
        assert float(losses.total) == pytest.approx(float(recon))
        assert losses.divergence == 0.0
        assert losses.fidelity == 0.0

    def test_total_is_weighted_sum(self, toy_model: PairedModel) -> None:
        config = TrainConfig(lambda1=2.0, lambda2=3.0, divergence=EXACT_SINKHORN)
        losses = total_loss(toy_model, _batch(), config, LINEAR_TASK, step=4)
        expected = (
            losses.reconstruction + 2.0 * losses.divergence + 3.0 * losses.fidelity
        )
        assert float(losses.total) == pytest.approx(expected, rel=1e-10)
        assert losses.weighted_divergence == pytest.approx(2.0 * losses.divergence)
        assert set(losses.as_dict()) == {"total", "recon", "div", "fidelity"}

    def test_deterministic_per_step(self, toy_model: PairedModel) -> None:
        config = TrainConfig(divergence=EXACT_SINKHORN, seed=3)
        batch = _batch()
        first = total_loss(toy_model, batch, config, LINEAR_TASK, step=2)
        again = total_loss(toy_model, batch, config, LINEAR_TASK, step=2)
        later = total_loss(toy_model, batch, config, LINEAR_TASK, step=3)
        assert float(first.total) == float(again.total)
        assert float(first.total) != float(later.total)

    def test_parameter_gradient_matches_finite_differences(
        self, toy_model: PairedModel
    ) -> None:
        batch = _batch()
        config = TrainConfig(lambda1=1.0, lambda2=1.0, divergence=EXACT_SINKHORN)
        weights = [
            (toy_model.encoder1[0].weight, (0, 0)),
            (toy_model.encoder2[0].weight, (1, 1)),
            (toy_model.decoder1[0].weight, (2, 1)),
            (toy_model.decoder2[-2].bias, (0,)),
        ]

        def loss() -> torch.Tensor:
            return total_loss(toy_model, batch, config, LINEAR_TASK, step=1).total

        toy_model.zero_grad()
        loss().backward()
        analytic = np.array([float(p.grad[i]) for p, i in weights])

        h = 1e-6
        numeric = []
        with torch.no_grad():
            for parameter, index in weights:
                original = float(parameter[index])
                parameter[index] = original + h
                plus = float(loss())
                parameter[index] = original - h
                minus = float(loss())
                parameter[index] = original
                numeric.append((plus - minus) / (2 * h))
        np.testing.assert_allclose(analytic, np.array(numeric), rtol=1e-3, atol=1e-7)

    def test_translation_loss(self) -> None:
        model = build_model(dense_toy(2), LatentSplit(0, 2, 0), dtype=torch.float64)
        task = TaskSpec(
            kind=TaskKind.TRANSLATION,
            source=DataSource.GAUSSIAN_TRANSLATION,
            gaussian_pair=GaussianPair(
                mean1=np.zeros(2), cov1=np.eye(2), mean2=np.ones(2), cov2=np.eye(2)
            ),
        )
        batch = PairedBatch(
            x1=torch.randn(8, 2, dtype=torch.float64),
            x2=torch.randn(8, 2, dtype=torch.float64) + 1.0,
            paired=False,
        )
        config = TrainConfig(divergence=EXACT_SINKHORN, lambda2=10.0)
        losses = total_loss(model, batch, config, task)
        expected = float(data_fidelity_translation(model, batch))
        assert losses.fidelity == pytest.approx(expected)
        assert losses.divergence_converged

    def test_invariant_to_batch_order(self, toy_model: PairedModel) -> None:
        config = TrainConfig(lambda1=1.0, lambda2=1.0, divergence=EXACT_SINKHORN)
        split = toy_model.split
        prior = sample_prior(split, 6, seed=0, dtype=torch.float64)
        fidelity = sample_prior(split, 6, seed=1, dtype=torch.float64)
        batch = _batch()
        shuffled = PairedBatch(x1=batch.x1[ORDER], x2=batch.x2[ORDER])

        first = total_loss(
            toy_model, batch, config, LINEAR_TASK, prior=prior, fidelity_prior=fidelity
        )
        # Fidelity draws stay attached to their samples.
        second = total_loss(
            toy_model,
            shuffled,
            config,
            LINEAR_TASK,
            prior=prior,
            fidelity_prior=_permuted(fidelity, ORDER),
        )
        assert float(second.total) == pytest.approx(float(first.total), rel=1e-9)
        assert second.fidelity == pytest.approx(first.fidelity, rel=1e-9)

    def test_doubling_lambda2_scales_only_the_fidelity_term(
        self, toy_model: PairedModel
    ) -> None:
        batch = _batch()
        single = TrainConfig(lambda1=1.0, lambda2=1.0, divergence=EXACT_SINKHORN)
        double = TrainConfig(lambda1=1.0, lambda2=2.0, divergence=EXACT_SINKHORN)
        base = total_loss(toy_model, batch, single, LINEAR_TASK, step=5)
        more = total_loss(toy_model, batch, double, LINEAR_TASK, step=5)
        assert more.reconstruction == pytest.approx(base.reconstruction, rel=1e-12)
        assert more.divergence == pytest.approx(base.divergence, rel=1e-12)
        assert more.fidelity == pytest.approx(base.fidelity, rel=1e-12)
        assert more.weighted_fidelity == pytest.approx(2.0 * base.weighted_fidelity)
        difference = float(more.total) - float(base.total)
        assert difference == pytest.approx(base.fidelity, rel=1e-9)
