"""Shared fixtures: tiny configurations and a synthetic MNIST directory."""

import copy
import json
from pathlib import Path
from typing import Any, Dict

import numpy as np
import pytest
import torch

from paired_wae.domain.entities.architecture import Activation, dense_toy
from paired_wae.domain.entities.latent import LatentSplit
from paired_wae.domain.entities.tasks import LinearGaussianOracle
from paired_wae.infrastructure.config_loader import parse_run_config
from paired_wae.infrastructure.idx_reader import MNIST_FILES, write_idx
from paired_wae.infrastructure.networks import PairedModel, build_model

TINY_LINEAR_GAUSSIAN: Dict[str, Any] = {
    "task": {
        "kind": "denoising",
        "source": "linear_gaussian",
        "n_train": 64,
        "n_test": 16,
        "linear_gaussian": LinearGaussianOracle.isotropic_denoising(
            dim=2, noise_std=0.5
        ).to_dict(),
    },
    "model": dense_toy(2, hidden=(16,)).to_dict(),
    "latent": {"d1": 2, "d2": 2, "d3": 2},
    "train": {
        "lambda1": 1.0,
        "lambda2": 1.0,
        "divergence": {"kind": "sinkhorn", "sinkhorn": {"max_iters": 200}},
        "batch_size": 16,
        "learning_rate": 1e-3,
        "iterations": 4,
        "seed": 0,
        "log_every": 2,
        "checkpoint_every": 0,
    },
    "evaluation": {
        "n_samples": 32,
        "n_conditions": 2,
        "n_test_images": 4,
        "latent_sample_size": 16,
    },
    "output_dir": "runs/tiny",
}

TINY_CONV_MNIST: Dict[str, Any] = {
    "task": {
        "kind": "denoising",
        "source": "mnist",
        "noise_std": 1.0,
        "n_train": 32,
        "n_test": 8,
    },
    "model": {
        "name": "tiny_conv",
        "kind": "conv",
        "data_shape": [1, 28, 28],
        "encoder_channels": [4, 8],
        "encoder_strides": [2, 2],
        "decoder_channels": [8, 4],
        "decoder_strides": [2, 2],
    },
    "latent": {"d1": 2, "d2": 2, "d3": 2},
    "train": {
        "batch_size": 8,
        "iterations": 2,
        "seed": 0,
        "log_every": 1,
        "divergence": {"kind": "sinkhorn", "sinkhorn": {"max_iters": 100}},
    },
    "evaluation": {
        "n_samples": 4,
        "n_conditions": 2,
        "n_test_images": 4,
        "latent_sample_size": 8,
    },
}


@pytest.fixture
def tiny_tree(tmp_path: Path) -> Dict[str, Any]:
    """Raw config of a linear-Gaussian run that trains in well under a second."""
    tree = copy.deepcopy(TINY_LINEAR_GAUSSIAN)
    tree["output_dir"] = str(tmp_path / "run")
    return tree


@pytest.fixture
def tiny_config_file(tmp_path: Path, tiny_tree: Dict[str, Any]) -> Path:
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(tiny_tree, indent=2), encoding="utf-8")
    return path


@pytest.fixture
def tiny_config(tiny_tree: Dict[str, Any]):
    return parse_run_config(tiny_tree)


@pytest.fixture
def mnist_dir(tmp_path: Path) -> Path:
    """IDX files with 48 training and 16 test images of random strokes."""
    directory = tmp_path / "mnist"
    rng = np.random.default_rng(7)
    for train, count in ((True, 48), (False, 16)):
        images = np.zeros((count, 28, 28), dtype=np.uint8)
        for image in images:
            row = rng.integers(4, 24)
            image[row : row + 3, 6:22] = 255
        labels = rng.integers(0, 10, size=count).astype(np.uint8)
        images_name, labels_name = MNIST_FILES[train]
        write_idx(directory / images_name, images)
        write_idx(directory / labels_name, labels)
    return directory


@pytest.fixture
def conv_tree(tmp_path: Path, mnist_dir: Path) -> Dict[str, Any]:
    tree = copy.deepcopy(TINY_CONV_MNIST)
    tree["task"]["data_dir"] = str(mnist_dir)
    tree["output_dir"] = str(tmp_path / "conv_run")
    return tree


@pytest.fixture
def toy_model() -> PairedModel:
    """Float64 dense model with smooth activations for gradient checks."""
    spec = dense_toy(2, hidden=(8,), activation=Activation.TANH)
    return build_model(spec, LatentSplit(2, 2, 2), seed=3, dtype=torch.float64)


@pytest.fixture
def trained_toy_model(toy_model: PairedModel) -> PairedModel:
    """The toy model marked as trained so samplers accept it."""
    toy_model.steps = 1
    return toy_model
