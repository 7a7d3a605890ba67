"""Loading, validating and writing run configurations."""

import copy
import json
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, TypeVar, Union

from ..domain.entities.architecture import (
    ArchitectureSpec,
    celeba_translation,
    dense_toy,
    mnist_reference,
)
from ..domain.entities.latent import LatentSplit
from ..domain.entities.measures import DivergenceKind
from ..domain.entities.run import EvaluationSettings, RunConfig
from ..domain.entities.tasks import (
    DataSource,
    LinearGaussianOracle,
    TaskKind,
    TaskSpec,
)
from ..domain.entities.training import (
    DivergenceSettings,
    MmdSettings,
    SinkhornSettings,
    SlicedSettings,
    TrainConfig,
)
from ..domain.exceptions import ConfigValidationError
from .logger import get_logger

T = TypeVar("T")

TOP_LEVEL_KEYS = {"task", "model", "latent", "train", "evaluation", "output_dir"}
TRAIN_KEYS = {
    "lambda1",
    "lambda2",
    "divergence",
    "batch_size",
    "learning_rate",
    "iterations",
    "seed",
    "log_every",
    "checkpoint_every",
}

ARCHITECTURE_PRESETS: Dict[str, Callable[[], ArchitectureSpec]] = {
    "mnist_reference": mnist_reference,
    "celeba_translation": celeba_translation,
}


def _linear_gaussian_preset() -> Dict[str, Any]:
    return {
        "task": {
            "kind": "denoising",
            "source": "linear_gaussian",
            "n_train": 20000,
            "n_test": 1000,
            "linear_gaussian": LinearGaussianOracle.isotropic_denoising(
                dim=2, noise_std=0.5
            ).to_dict(),
        },
        "model": dense_toy(2, hidden=(64, 64)).to_dict(),
        "latent": {"d1": 2, "d2": 2, "d3": 2},
        "train": {
            "lambda1": 1.0,
            "lambda2": 1.0,
            "divergence": {"kind": "sinkhorn"},
            "batch_size": 256,
            "learning_rate": 1e-3,
            "iterations": 3000,
            "seed": 0,
            "log_every": 100,
            "checkpoint_every": 0,
        },
        "evaluation": {"n_samples": 512, "n_conditions": 10},
        "output_dir": "runs/denoise_linear_gaussian",
    }


def _mnist_preset(kind: str, noise_std: float) -> Dict[str, Any]:
    return {
        "task": {
            "kind": kind,
            "source": "mnist",
            "noise_std": noise_std,
            "data_dir": "data/mnist",
            "n_train": 60000,
            "n_test": 10000,
        },
        "model": "mnist_reference",
        "latent": {"d1": 16, "d2": 16, "d3": 16},
        "train": {
            "lambda1": 1.0,
            "lambda2": 1.0,
            "divergence": {"kind": "sinkhorn"},
            "batch_size": 128,
            "learning_rate": 1e-3,
            "iterations": 2000,
            "seed": 0,
            "log_every": 100,
            "checkpoint_every": 500,
        },
        "evaluation": {"n_samples": 64, "n_test_images": 100},
        "output_dir": f"runs/{kind}_mnist",
    }


def _gaussian_translation_preset() -> Dict[str, Any]:
    return {
        "task": {
            "kind": "translation",
            "source": "gaussian_translation",
            "n_train": 20000,
            "n_test": 2000,
            "gaussian_pair": {
                "mean1": [0.0, 0.0],
                "cov1": [[1.0, 0.3], [0.3, 0.5]],
                "mean2": [3.0, 1.0],
                "cov2": [[0.5, -0.2], [-0.2, 1.5]],
            },
        },
        "model": dense_toy(2, hidden=(64, 64)).to_dict(),
        "latent": {"d1": 0, "d2": 2, "d3": 0},
        "train": {
            "lambda1": 1.0,
            "lambda2": 10.0,
            "divergence": {"kind": "sinkhorn"},
            "batch_size": 256,
            "learning_rate": 1e-3,
            "iterations": 3000,
            "seed": 0,
            "log_every": 100,
            "checkpoint_every": 0,
        },
        "evaluation": {"n_samples": 2000},
        "output_dir": "runs/translate_gaussian",
    }


def _celeba_preset() -> Dict[str, Any]:
    return {
        "task": {
            "kind": "translation",
            "source": "image_folder",
            "image_dirs": ["data/celeba/blond", "data/celeba/black"],
            "n_train": 20000,
            "n_test": 1000,
        },
        "model": "celeba_translation",
        "latent": {"d1": 0, "d2": 64, "d3": 0},
        "train": {
            "lambda1": 1.0,
            "lambda2": 10.0,
            "divergence": {"kind": "sinkhorn"},
            "batch_size": 64,
            "learning_rate": 2e-4,
            "iterations": 50000,
            "seed": 0,
            "log_every": 200,
            "checkpoint_every": 5000,
        },
        "evaluation": {"n_samples": 64, "n_test_images": 64},
        "output_dir": "runs/translate_celeba",
    }


PRESETS: Dict[str, Callable[[], Dict[str, Any]]] = {
    "denoise_mnist": lambda: _mnist_preset("denoising", 1.0),
    "inpaint_mnist": lambda: _mnist_preset("inpainting", 0.1),
    "denoise_linear_gaussian": _linear_gaussian_preset,
    "translate_gaussian": _gaussian_translation_preset,
    "translate_celeba": _celeba_preset,
}

# Preset used by `train --task <alias>` without --config
TASK_DEFAULT_PRESET = {
    TaskKind.DENOISING: "denoise_mnist",
    TaskKind.INPAINTING: "inpaint_mnist",
    TaskKind.TRANSLATION: "translate_gaussian",
}


def preset_config(name: str) -> Dict[str, Any]:
    """A fresh copy of a named preset as a raw config tree."""
    if name not in PRESETS:
        raise ValueError(
            f"Unknown preset '{name}'. Available: {', '.join(sorted(PRESETS))}"
        )
    return copy.deepcopy(PRESETS[name]())


class _Violations:
    """Collects every violated field instead of stopping at the first."""

    def __init__(self) -> None:
        self.items: List[str] = []

    def add(self, field: str, message: str) -> None:
        self.items.append(f"{field}: {message}")

    def build(self, field: str, factory: Callable[[], T]) -> Optional[T]:
        try:
            return factory()
        except (ValueError, KeyError, TypeError) as e:
            detail = f"missing key {e}" if isinstance(e, KeyError) else str(e)
            self.add(field, detail)
            return None


def _require_mapping(data: Any, field: str, violations: _Violations) -> Dict[str, Any]:
    if data is None:
        violations.add(field, "section is missing")
        return {}
    if not isinstance(data, dict):
        violations.add(field, f"must be an object, got {type(data).__name__}")
        return {}
    return data


def _divergence_settings(
    data: Dict[str, Any], violations: _Violations
) -> DivergenceSettings:
    kind = violations.build(
        "train.divergence.kind",
        lambda: DivergenceKind(str(data.get("kind", "sinkhorn")).lower()),
    )
    sinkhorn = violations.build(
        "train.divergence.sinkhorn",
        lambda: SinkhornSettings(**data.get("sinkhorn", {})),
    )
    sliced = violations.build(
        "train.divergence.sliced", lambda: SlicedSettings(**data.get("sliced", {}))
    )
    mmd = violations.build(
        "train.divergence.mmd", lambda: MmdSettings(**data.get("mmd", {}))
    )
    return DivergenceSettings(
        kind=kind or DivergenceKind.SINKHORN,
        sinkhorn=sinkhorn or SinkhornSettings(),
        sliced=sliced or SlicedSettings(),
        mmd=mmd or MmdSettings(),
    )


def _train_config(
    data: Dict[str, Any], violations: _Violations
) -> Optional[TrainConfig]:
    for key in sorted(set(data) - TRAIN_KEYS):
        violations.add(f"train.{key}", "unknown field")

    rules = {
        "lambda1": (lambda v: v >= 0, "must be nonnegative"),
        "lambda2": (lambda v: v >= 0, "must be nonnegative"),
        "batch_size": (lambda v: int(v) == v and v >= 2, "must be an integer >= 2"),
        "learning_rate": (lambda v: v > 0, "must be positive"),
        "iterations": (lambda v: int(v) == v and v >= 0, "must be an integer >= 0"),
        "seed": (lambda v: int(v) == v and v >= 0, "must be an integer >= 0"),
        "log_every": (lambda v: int(v) == v and v >= 1, "must be an integer >= 1"),
        "checkpoint_every": (
            lambda v: int(v) == v and v >= 0,
            "must be an integer >= 0",
        ),
    }
    failed = False
    for key, (rule, message) in rules.items():
        if key not in data:
            continue
        value = data[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            violations.add(f"train.{key}", f"must be a number, got {value!r}")
            failed = True
        elif not rule(value):
            violations.add(f"train.{key}", f"{message}, got {value!r}")
            failed = True

    divergence_data = _require_mapping(
        data.get("divergence", {}), "train.divergence", violations
    )
    divergence = _divergence_settings(divergence_data, violations)
    if failed:
        return None
    kwargs = {k: data[k] for k in rules if k in data}
    for key in ("batch_size", "iterations", "seed", "log_every", "checkpoint_every"):
        if key in kwargs:
            kwargs[key] = int(kwargs[key])
    return violations.build(
        "train", lambda: TrainConfig(divergence=divergence, **kwargs)
    )


def _architecture(data: Any, violations: _Violations) -> Optional[ArchitectureSpec]:
    if isinstance(data, str):
        if data not in ARCHITECTURE_PRESETS:
            violations.add(
                "model",
                f"unknown preset '{data}' (available: "
                f"{', '.join(sorted(ARCHITECTURE_PRESETS))})",
            )
            return None
        return ARCHITECTURE_PRESETS[data]()
    mapping = _require_mapping(data, "model", violations)
    if not mapping:
        return None
    return violations.build("model", lambda: ArchitectureSpec.from_dict(mapping))


def _cross_checks(
    task: TaskSpec,
    model: ArchitectureSpec,
    latent: LatentSplit,
    train: Optional[TrainConfig],
    violations: _Violations,
) -> None:
    if task.kind == TaskKind.TRANSLATION and not latent.is_translation:
        violations.add(
            "latent", f"translation needs d1 = d3 = 0, got {latent.as_tuple()}"
        )
    if latent.encoder1_dim < 1 or latent.encoder2_dim < 1:
        violations.add("latent", "both encoders need at least one output dimension")
    if task.source == DataSource.LINEAR_GAUSSIAN and task.linear_gaussian is not None:
        oracle = task.linear_gaussian
        if model.data_shape != (oracle.x1_dim,):
            violations.add(
                "model.data_shape",
                f"must be [{oracle.x1_dim}] for the linear-Gaussian oracle",
            )
        if model.x2_shape != (oracle.x2_dim,):
            violations.add(
                "model.observation_shape",
                f"must be [{oracle.x2_dim}] for the linear-Gaussian oracle",
            )
    pair = task.gaussian_pair
    if task.source == DataSource.GAUSSIAN_TRANSLATION and pair is not None:
        if model.data_shape != (pair.dim,):
            violations.add(
                "model.data_shape",
                f"must be [{pair.dim}] for the Gaussian pair",
            )
    if task.source in (DataSource.MNIST, DataSource.MNIST_DIGITS):
        if model.data_shape != (1, 28, 28):
            violations.add("model.data_shape", "MNIST images need [1, 28, 28]")
    if task.mask is not None and tuple(task.mask.shape) != model.data_shape:
        violations.add(
            "task.mask",
            f"shape {tuple(task.mask.shape)} does not match "
            f"data shape {model.data_shape}",
        )
    if task.kind == TaskKind.TRANSLATION and model.x2_shape != model.data_shape:
        violations.add(
            "model.observation_shape", "translation needs X1 and X2 of one shape"
        )
    if train is not None and train.batch_size > task.n_train:
        violations.add(
            "train.batch_size",
            f"{train.batch_size} exceeds the {task.n_train} training samples",
        )


def parse_run_config(data: Any, source: str = "<config>") -> RunConfig:
    """
    Validate a raw config tree and build the RunConfig.

    Raises:
        ConfigValidationError: Listing every violated field
    """
    violations = _Violations()
    root = _require_mapping(data, "config", violations)
    for key in sorted(set(root) - TOP_LEVEL_KEYS):
        violations.add(key, "unknown field")

    task_data = _require_mapping(root.get("task"), "task", violations)
    task = (
        violations.build("task", lambda: TaskSpec.from_dict(task_data))
        if task_data
        else None
    )
    model = _architecture(root.get("model"), violations)
    latent_data = _require_mapping(root.get("latent"), "latent", violations)
    latent = (
        violations.build(
            "latent",
            lambda: LatentSplit(
                d1=latent_data["d1"], d2=latent_data["d2"], d3=latent_data["d3"]
            ),
        )
        if latent_data
        else None
    )
    train_data = _require_mapping(root.get("train"), "train", violations)
    train = _train_config(train_data, violations)
    evaluation = violations.build(
        "evaluation", lambda: EvaluationSettings(**root.get("evaluation", {}))
    )

    if task is not None and model is not None and latent is not None:
        _cross_checks(task, model, latent, train, violations)

    if violations.items:
        get_logger(__name__).error(
            f"{source}: {len(violations.items)} invalid configuration field(s)"
        )
        raise ConfigValidationError(violations.items)

    assert task and model and latent and train and evaluation
    return RunConfig(
        task=task,
        model=model,
        latent=latent,
        train=train,
        output_dir=Path(str(root.get("output_dir", "runs"))),
        evaluation=evaluation,
    )


def read_config_tree(path: Union[str, Path]) -> Dict[str, Any]:
    """Read a JSON config file into a raw tree."""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigValidationError([f"{path}: not valid JSON ({e})"])
    if not isinstance(data, dict):
        raise ConfigValidationError([f"{path}: top level must be an object"])
    return data


def apply_overrides(
    data: Dict[str, Any],
    seed: Optional[int] = None,
    output_dir: Optional[Union[str, Path]] = None,
) -> Dict[str, Any]:
    """Return a copy of the tree with CLI overrides applied."""
    data = copy.deepcopy(data)
    if seed is not None:
        data.setdefault("train", {})["seed"] = seed
    if output_dir is not None:
        data["output_dir"] = str(output_dir)
    return data


def load_run_config(
    path: Union[str, Path],
    seed: Optional[int] = None,
    output_dir: Optional[Union[str, Path]] = None,
) -> RunConfig:
    """Read, override and validate a JSON config file."""
    tree = apply_overrides(read_config_tree(path), seed, output_dir)
    return parse_run_config(tree, source=str(path))


def save_run_config(config: RunConfig, path: Union[str, Path]) -> Path:
    """Write the effective config as indented JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(config.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
    return path
