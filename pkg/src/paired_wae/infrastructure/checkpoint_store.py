"""Checkpoint archives: a flat parameter vector plus a JSON manifest."""

import hashlib
import json
import zipfile
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
import torch

from ..domain.entities.architecture import ArchitectureSpec
from ..domain.entities.latent import LatentSplit
from ..domain.entities.run import RunConfig
from ..domain.exceptions import CorruptArchiveError, ManifestMismatchError
from .config_loader import parse_run_config
from .git_utils import get_source_revision
from .logger import get_logger
from .networks import PairedModel, build_model

CHECKPOINT_FORMAT_VERSION = 1
MANIFEST_NAME = "manifest.json"
THETA_NAME = "theta.bin"
THETA_DTYPE = "<f4"
# Parameters are stored at the model's own floating precision
THETA_DTYPES = {torch.float32: "<f4", torch.float64: "<f8"}
TORCH_DTYPES = {code: dtype for dtype, code in THETA_DTYPES.items()}
# Fixed member timestamp so equal models give byte-identical archives
ZIP_DATE_TIME = (1980, 1, 1, 0, 0, 0)


@dataclass
class CheckpointInfo:
    """Where a checkpoint went and its SHA-256."""

    path: Path
    sha256: str
    steps: int
    config_hash: str


@dataclass
class LoadedCheckpoint:
    """A restored model together with its manifest and config."""

    model: PairedModel
    config: RunConfig
    manifest: Dict[str, Any]

    @property
    def config_hash(self) -> str:
        return str(self.manifest["config_hash"])


def file_sha256(path: Union[str, Path]) -> str:
    """SHA-256 of a file's bytes."""
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_member(archive: zipfile.ZipFile, name: str, payload: bytes) -> None:
    info = zipfile.ZipInfo(name, date_time=ZIP_DATE_TIME)
    info.compress_type = zipfile.ZIP_STORED
    info.external_attr = 0o644 << 16
    archive.writestr(info, payload)


def save_checkpoint(
    model: PairedModel,
    path: Union[str, Path],
    config: RunConfig,
    source_revision: Optional[str] = None,
) -> CheckpointInfo:
    """
    Write the model parameters as little-endian floats plus a manifest.

    float32 models are stored as `<f4`, float64 models as `<f8`, so every
    model restores bit-exactly.

    Args:
        model: Model to store
        path: Destination archive
        config: Run configuration the model was trained under
        source_revision: Commit of the producing code (looked up when omitted)

    Returns:
        CheckpointInfo with the archive's SHA-256

    Raises:
        ManifestMismatchError: If the model does not match the configuration
        ValueError: If the model uses an unsupported floating dtype
    """
    logger = get_logger(__name__)
    path = Path(path)
    if model.split != config.latent or model.spec != config.model:
        raise ManifestMismatchError(
            "Model architecture or latent split differs from the run configuration"
        )

    dtype = next(model.parameters()).dtype
    if dtype not in THETA_DTYPES:
        raise ValueError(f"Cannot store parameters of dtype {dtype}")
    theta_dtype = THETA_DTYPES[dtype]
    theta = model.state_vector().detach().cpu().numpy().astype(theta_dtype)
    theta_bytes = theta.tobytes()
    manifest = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "architecture": config.model.to_dict(),
        "latent": {"d1": model.split.d1, "d2": model.split.d2, "d3": model.split.d3},
        "task": config.task.label,
        "config": config.to_dict(include_output=False),
        "config_hash": config.config_hash,
        "seed": config.train.seed,
        "steps": model.steps,
        "state_layout": [[name, list(shape)] for name, shape in model.state_layout()],
        "integer_state": model.integer_state(),
        "theta_dtype": theta_dtype,
        "theta_size": int(theta.size),
        "theta_sha256": hashlib.sha256(theta_bytes).hexdigest(),
        "source_revision": source_revision or get_source_revision(),
    }
    manifest_bytes = json.dumps(manifest, sort_keys=True, indent=2).encode("utf-8")

    path.parent.mkdir(parents=True, exist_ok=True)
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as archive:
        _write_member(archive, MANIFEST_NAME, manifest_bytes)
        _write_member(archive, THETA_NAME, theta_bytes)

    sha = file_sha256(path)
    logger.debug(f"Saved checkpoint {path} ({theta.size} values, sha256 {sha[:12]})")
    return CheckpointInfo(
        path=path, sha256=sha, steps=model.steps, config_hash=config.config_hash
    )


def read_manifest(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Manifest of a checkpoint archive.

    Raises:
        CorruptArchiveError: If the archive or its manifest cannot be read
    """
    path = Path(path)
    try:
        with zipfile.ZipFile(path, "r") as archive:
            manifest = json.loads(archive.read(MANIFEST_NAME).decode("utf-8"))
    except (zipfile.BadZipFile, KeyError, ValueError, OSError) as e:
        raise CorruptArchiveError(f"Cannot read checkpoint manifest of {path}: {e}")
    if not isinstance(manifest, dict):
        raise CorruptArchiveError(f"{path}: manifest is not an object")
    version = manifest.get("format_version")
    if version != CHECKPOINT_FORMAT_VERSION:
        raise CorruptArchiveError(
            f"{path}: unsupported checkpoint format version {version!r}"
        )
    return manifest


def _stored_dtype(path: Path, manifest: Dict[str, Any]) -> str:
    code = str(manifest.get("theta_dtype", THETA_DTYPE))
    if code not in TORCH_DTYPES:
        raise CorruptArchiveError(f"{path}: unsupported parameter dtype {code!r}")
    return code


def _read_theta(path: Path, manifest: Dict[str, Any]) -> np.ndarray:
    try:
        with zipfile.ZipFile(path, "r") as archive:
            payload = archive.read(THETA_NAME)
    except (zipfile.BadZipFile, KeyError, OSError) as e:
        raise CorruptArchiveError(f"Cannot read parameters of {path}: {e}")
    if hashlib.sha256(payload).hexdigest() != manifest.get("theta_sha256"):
        raise CorruptArchiveError(f"{path}: parameter payload fails its checksum")
    dtype = np.dtype(_stored_dtype(path, manifest))
    if len(payload) % dtype.itemsize:
        raise CorruptArchiveError(f"{path}: parameter payload has a partial value")
    return np.frombuffer(payload, dtype=dtype).astype(dtype.newbyteorder("="))


def _check_manifest(
    manifest: Dict[str, Any],
    spec: ArchitectureSpec,
    split: LatentSplit,
    model: PairedModel,
) -> None:
    latent = manifest.get("latent", {})
    stored_split = (latent.get("d1"), latent.get("d2"), latent.get("d3"))
    if stored_split != split.as_tuple():
        raise ManifestMismatchError(
            f"Checkpoint latent split {stored_split} differs from {split.as_tuple()}"
        )
    if manifest.get("architecture") != spec.to_dict():
        raise ManifestMismatchError(
            f"Checkpoint architecture differs from '{spec.name}' of the target model"
        )
    layout = [[name, list(shape)] for name, shape in model.state_layout()]
    if manifest.get("state_layout") != layout:
        raise ManifestMismatchError(
            "Checkpoint parameter layout differs from the model"
        )


def load_checkpoint(
    path: Union[str, Path], model: Optional[PairedModel] = None
) -> LoadedCheckpoint:
    """
    Restore a model from a checkpoint.

    When ``model`` is given its architecture and split must match the
    manifest; otherwise a model is built from the stored configuration.

    Raises:
        CorruptArchiveError: On an unreadable archive or payload
        ManifestMismatchError: On any architecture, split or layout disagreement
    """
    path = Path(path)
    manifest = read_manifest(path)
    try:
        config = parse_run_config(manifest["config"], source=f"{path}:{MANIFEST_NAME}")
    except KeyError as e:
        raise CorruptArchiveError(f"{path}: manifest lacks {e}")

    if config.config_hash != manifest.get("config_hash"):
        raise ManifestMismatchError(
            f"{path}: stored config does not hash to the recorded config hash"
        )
    if model is None:
        model = build_model(
            config.model,
            config.latent,
            seed=config.train.seed,
            dtype=TORCH_DTYPES[_stored_dtype(path, manifest)],
        )
    elif model.spec != config.model or model.split != config.latent:
        raise ManifestMismatchError(
            f"Model ({model.spec.name}, split {model.split.as_tuple()}) does not match "
            f"checkpoint config ({config.model.name}, split {config.latent.as_tuple()})"
        )
    _check_manifest(manifest, config.model, config.latent, model)

    theta = _read_theta(path, manifest)
    dtype = next(model.parameters()).dtype
    model.load_state_vector(
        torch.from_numpy(theta.copy()).to(dtype),
        {str(k): int(v) for k, v in manifest.get("integer_state", {}).items()},
    )
    model.steps = int(manifest.get("steps", 0))
    get_logger(__name__).debug(
        f"Loaded checkpoint {path} at step {model.steps} ({config.task.label})"
    )
    return LoadedCheckpoint(model=model, config=config, manifest=manifest)
