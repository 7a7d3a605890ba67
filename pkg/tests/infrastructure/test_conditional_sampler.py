"""Tests for conditional sampling."""

import pytest
import torch

from paired_wae.domain.entities.architecture import dense_toy
from paired_wae.domain.entities.latent import LatentSplit
from paired_wae.domain.exceptions import ShapeMismatchError, UntrainedModelError
from paired_wae.infrastructure.conditional_sampler import ConditionalSampler
from paired_wae.infrastructure.networks import PairedModel, build_model

CONDITION = torch.tensor([0.3, -1.2], dtype=torch.float64)


class TestConditionalSampler:
    """Test cases for ConditionalSampler."""

    def test_refuses_untrained_model(self, toy_model: PairedModel) -> None:
        with pytest.raises(UntrainedModelError):
            ConditionalSampler(toy_model)
        ConditionalSampler(toy_model, allow_untrained=True)

    def test_samples_are_deterministic(self, trained_toy_model: PairedModel) -> None:
        sampler = ConditionalSampler(trained_toy_model)
        first = sampler.sample_conditional(CONDITION, 16, seed=4)
        again = sampler.sample_conditional(CONDITION, 16, seed=4)
        other = sampler.sample_conditional(CONDITION, 16, seed=5)
        assert first.shape == (16, 2)
        assert torch.equal(first, again)
        assert not torch.equal(first, other)

    def test_larger_n_extends_sequence(self, trained_toy_model: PairedModel) -> None:
        sampler = ConditionalSampler(trained_toy_model)
        short = sampler.sample_conditional(CONDITION, 4, seed=1)
        long = sampler.sample_conditional(CONDITION, 32, seed=1)
        torch.testing.assert_close(long[:4], short, rtol=0.0, atol=1e-12)

    def test_zero_sigma_equals_point_estimate(
        self, trained_toy_model: PairedModel
    ) -> None:
        sampler = ConditionalSampler(trained_toy_model)
        ladder = sampler.perturbed_estimates(CONDITION, [-1.0, 0.0, 1.0], axis_index=1)
        assert len(ladder) == 3
        assert torch.equal(ladder[1], sampler.point_estimate(CONDITION))
        assert not torch.equal(ladder[0], ladder[2])

    def test_point_estimate_is_cross_reconstruction_at_zero(
        self, trained_toy_model: PairedModel
    ) -> None:
        sampler = ConditionalSampler(trained_toy_model)
        zero = torch.zeros(1, 2, dtype=torch.float64)
        with torch.no_grad():
            expected = trained_toy_model.cross_reconstruct_x1(zero, CONDITION[None])[0]
        torch.testing.assert_close(sampler.point_estimate(CONDITION), expected)

    def test_accepts_leading_batch_axis(self, trained_toy_model: PairedModel) -> None:
        sampler = ConditionalSampler(trained_toy_model)
        assert torch.equal(
            sampler.point_estimate(CONDITION), sampler.point_estimate(CONDITION[None])
        )
        with pytest.raises(ShapeMismatchError):
            sampler.point_estimate(torch.zeros(2, 2, dtype=torch.float64))

    def test_moments(self, trained_toy_model: PairedModel) -> None:
        sampler = ConditionalSampler(trained_toy_model)
        mean, std = sampler.conditional_moments(CONDITION, 64, seed=0)
        samples = sampler.sample_conditional(CONDITION, 64, seed=0)
        torch.testing.assert_close(mean, samples.mean(dim=0))
        assert bool((std > 0).all())
        with pytest.raises(ValueError):
            sampler.conditional_moments(CONDITION, 1, seed=0)

    def test_no_private_block_has_zero_std(self) -> None:
        model = build_model(dense_toy(2), LatentSplit(0, 2, 2), dtype=torch.float64)
        model.steps = 1
        sampler = ConditionalSampler(model)
        mean, std = sampler.conditional_moments(CONDITION, 8, seed=0)
        assert torch.equal(std, torch.zeros_like(std))
        assert torch.equal(mean, sampler.point_estimate(CONDITION))
        samples = sampler.sample_conditional(CONDITION, 5, seed=0)
        assert bool((samples == samples[0]).all())
        assert not sampler.diagnose_private_block(CONDITION)

    def test_reverse_direction(self, trained_toy_model: PairedModel) -> None:
        sampler = ConditionalSampler(trained_toy_model)
        samples = sampler.sample_conditional_reverse(CONDITION, 6, seed=2)
        assert samples.shape == (6, 2)
        mean, std = sampler.conditional_moments_reverse(CONDITION, 6, seed=2)
        torch.testing.assert_close(mean, samples.mean(dim=0))
        assert sampler.point_estimate_reverse(CONDITION).shape == (2,)

    def test_detects_dead_private_block(self, trained_toy_model: PairedModel) -> None:
        sampler = ConditionalSampler(trained_toy_model)
        assert not sampler.diagnose_private_block(CONDITION)
        with torch.no_grad():
            trained_toy_model.decoder1[0].weight[:, :2] = 0.0
        assert sampler.diagnose_private_block(CONDITION)

    def test_restores_training_mode(self, trained_toy_model: PairedModel) -> None:
        trained_toy_model.train()
        ConditionalSampler(trained_toy_model).sample_conditional(CONDITION, 2, seed=0)
        assert trained_toy_model.training

    def test_perturbations_vanish_continuously(
        self, trained_toy_model: PairedModel
    ) -> None:
        sampler = ConditionalSampler(trained_toy_model)
        base, *ladder = sampler.perturbed_estimates(
            CONDITION, [0.0, 1e-3, 1e-4, 1e-5], axis_index=0
        )
        gaps = [float((estimate - base).norm()) for estimate in ladder]
        assert gaps[0] > 0
        assert gaps[0] > gaps[1] > gaps[2]
        assert gaps[2] < gaps[0] / 10
