"""Tests for the latent prior."""

import numpy as np
import pytest
import torch

from paired_wae.domain.entities.latent import LatentSplit
from paired_wae.domain.exceptions import ConfigurationError
from paired_wae.infrastructure.evaluation_metrics import cross_block_correlation
from paired_wae.infrastructure.latent_prior import (
    perturbation_code,
    prior_for_step,
    random_axis,
    sample_prior,
    sample_private,
)


class TestSamplePrior:
    """Test cases for prior draws."""

    def test_shapes(self) -> None:
        code = sample_prior(LatentSplit(1, 2, 3), 5, seed=0)
        assert code.z1.shape == (5, 1)
        assert code.z2.shape == (5, 2)
        assert code.z3.shape == (5, 3)
        assert code.z1.dtype == torch.float32

    def test_same_seed_same_codes(self) -> None:
        split = LatentSplit(2, 2, 2)
        first = sample_prior(split, 8, seed=4)
        second = sample_prior(split, 8, seed=4)
        assert torch.equal(first.concat(), second.concat())
        assert not torch.equal(first.concat(), sample_prior(split, 8, seed=5).concat())

    def test_prefix_does_not_depend_on_n(self) -> None:
        split = LatentSplit(3, 1, 2)
        short = sample_prior(split, 4, seed=9)
        long = sample_prior(split, 100, seed=9)
        assert torch.equal(long.concat()[:4], short.concat())

    def test_blocks_are_uncorrelated(self) -> None:
        code = sample_prior(LatentSplit(2, 2, 2), 10000, seed=1, dtype=torch.float64)
        assert cross_block_correlation(code.z1, code.z2) <= 0.05
        assert cross_block_correlation(code.z2, code.z3) <= 0.05
        assert cross_block_correlation(code.z1, code.z3) <= 0.05

    def test_standard_moments(self) -> None:
        values = sample_prior(LatentSplit(2, 2, 2), 20000, seed=2).concat().numpy()
        np.testing.assert_allclose(values.mean(axis=0), 0.0, atol=0.05)
        np.testing.assert_allclose(values.std(axis=0), 1.0, atol=0.05)

    def test_rejects_empty_draw(self) -> None:
        with pytest.raises(ValueError):
            sample_prior(LatentSplit(1, 1, 1), 0, seed=0)

    def test_step_streams_are_independent(self) -> None:
        split = LatentSplit(2, 2, 2)
        divergence = prior_for_step(split, 4, seed=0, step=3, stream=0)
        fidelity = prior_for_step(split, 4, seed=0, step=3, stream=1)
        later = prior_for_step(split, 4, seed=0, step=4, stream=0)
        assert not torch.equal(divergence.concat(), fidelity.concat())
        assert not torch.equal(divergence.concat(), later.concat())
        again = prior_for_step(split, 4, seed=0, step=3, stream=0)
        assert torch.equal(divergence.concat(), again.concat())

    def test_private_draws(self) -> None:
        draws = sample_private(3, 6, seed=2)
        assert draws.shape == (6, 3)
        assert torch.equal(sample_private(3, 2, seed=2), draws[:2])


class TestPerturbation:
    """Test cases for perturbation codes and ladder axes."""

    def test_unit_vector(self) -> None:
        code = perturbation_code(LatentSplit(4, 2, 2), 0.5, 2)
        assert code.tolist() == [0.0, 0.0, 0.5, 0.0]

    @pytest.mark.parametrize("axis", [-1, 4])
    def test_axis_out_of_range(self, axis: int) -> None:
        with pytest.raises(ValueError, match="axis_index"):
            perturbation_code(LatentSplit(4, 2, 2), 1.0, axis)

    def test_no_private_block(self) -> None:
        with pytest.raises(ValueError):
            perturbation_code(LatentSplit(0, 2, 2), 1.0, 0)
        with pytest.raises(ConfigurationError):
            random_axis(LatentSplit(0, 2, 2), seed=0)

    def test_random_axis_is_seeded(self) -> None:
        split = LatentSplit(16, 16, 16)
        axes = {random_axis(split, seed) for seed in range(50)}
        assert axes <= set(range(16))
        assert len(axes) > 1
        assert random_axis(split, 7) == random_axis(split, 7)
