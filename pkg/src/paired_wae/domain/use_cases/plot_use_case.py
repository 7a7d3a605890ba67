"""Plot use case: renders figures from directories of sample arrays."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..entities.run import PlotRequest, PlotResult
from ..exceptions import MixedConfigHashError
from ...infrastructure.array_store import ARRAY_SUFFIX, StoredArray, read_array
from ...infrastructure.image_grid import (
    render_sample_grid,
    render_scatter,
    std_to_image,
)
from ...infrastructure.logger import get_logger

SAMPLES_FILE = f"samples{ARRAY_SUFFIX}"


@dataclass
class SampleSet:
    """The arrays one sampling run wrote for one conditioning input."""

    directory: Path
    arrays: Dict[str, StoredArray]

    @property
    def config_hash(self) -> str:
        return self.arrays["samples"].config_hash

    def get(self, role: str) -> Optional[np.ndarray]:
        stored = self.arrays.get(role)
        return None if stored is None else stored.data

    @property
    def sigmas(self) -> List[float]:
        ladder = self.arrays.get("ladder")
        return [] if ladder is None else [float(s) for s in ladder.attributes["sigmas"]]

    @property
    def is_image(self) -> bool:
        return self.arrays["samples"].data.ndim == 4


def load_sample_set(directory: Path) -> SampleSet:
    """Read every array file of one sample directory, keyed by file stem."""
    arrays = {
        path.stem: read_array(path)
        for path in sorted(directory.glob(f"*{ARRAY_SUFFIX}"))
    }
    if "samples" not in arrays:
        raise ValueError(f"{directory} contains no {SAMPLES_FILE}")
    return SampleSet(directory=directory, arrays=arrays)


def find_sample_sets(root: Path) -> List[SampleSet]:
    """The sample directories at or below ``root``, in path order."""
    directories = sorted({path.parent for path in root.rglob(SAMPLES_FILE)})
    if not directories:
        raise ValueError(f"No sample arrays found under {root}")
    return [load_sample_set(directory) for directory in directories]


def grid_columns(sigmas: Sequence[float]) -> List[str]:
    """Column labels: truth, observation, one per sigma, mean and std."""
    return (
        ["truth", "observation"]
        + [f"sigma={sigma:+g}" for sigma in sigmas]
        + ["mean", "std"]
    )


def grid_row(sample_set: SampleSet, n_ladder: int) -> List[Optional[np.ndarray]]:
    """One grid row; a ladder shorter than ``n_ladder`` leaves blank cells."""
    ladder = sample_set.get("ladder")
    steps: List[Optional[np.ndarray]] = [] if ladder is None else list(ladder)
    steps += [None] * (n_ladder - len(steps))
    std = sample_set.get("std")
    return (
        [sample_set.get("truth"), sample_set.get("condition")]
        + steps
        + [sample_set.get("mean"), None if std is None else std_to_image(std)]
    )


class PlotUseCase:
    """Use case for rendering sample grids and scatter plots."""

    GRID_NAME = "grid.png"
    SCATTER_NAME = "scatter.png"

    def __init__(self, logger: Optional[logging.Logger] = None) -> None:
        """
        Initialize the plot use case.

        Args:
            logger: Logger instance. If None, will create a default logger.
        """
        self._logger = logger or get_logger(__name__)

    def execute(self, request: PlotRequest) -> PlotResult:
        """
        Render one figure from every sample set under ``request.samples_dir``.

        Image samples become a grid with one row per conditioning input;
        vector samples become a scatter plot.

        Raises:
            MixedConfigHashError: If the sample sets come from different configs
        """
        sample_sets = find_sample_sets(request.samples_dir)
        hashes = {
            stored.config_hash for s in sample_sets for stored in s.arrays.values()
        }
        if len(hashes) != 1:
            raise MixedConfigHashError(
                f"{request.samples_dir} mixes arrays of {len(hashes)} configurations"
            )
        config_hash = hashes.pop()

        if all(s.is_image for s in sample_sets):
            output = request.output_path or request.samples_dir / self.GRID_NAME
            self._render_grid(sample_sets, output, config_hash)
        else:
            output = request.output_path or request.samples_dir / self.SCATTER_NAME
            self._render_scatter(sample_sets, output, config_hash)
        self._logger.info(f"Rendered {len(sample_sets)} sample set(s) to {output}")
        return PlotResult(
            config_hash=config_hash, output_path=output, rows=len(sample_sets)
        )

    def _render_grid(
        self, sample_sets: List[SampleSet], output: Path, config_hash: str
    ) -> None:
        ladders = [s.sigmas for s in sample_sets]
        longest = max(ladders, key=len)
        if any(ladder and ladder != longest[: len(ladder)] for ladder in ladders):
            self._logger.warning("Sample sets use different sigma ladders")
        rows = [grid_row(s, len(longest)) for s in sample_sets]
        render_sample_grid(rows, grid_columns(longest), output, config_hash)

    def _render_scatter(
        self, sample_sets: List[SampleSet], output: Path, config_hash: str
    ) -> None:
        series: Dict[str, np.ndarray] = {}
        for index, sample_set in enumerate(sample_sets):
            series[f"samples #{index}"] = sample_set.arrays["samples"].data
            for role in ("point_estimate", "truth"):
                value = sample_set.get(role)
                if value is not None:
                    series[f"{role.replace('_', ' ')} #{index}"] = value.reshape(1, -1)
        render_scatter(series, output, config_hash, title="Conditional samples")
