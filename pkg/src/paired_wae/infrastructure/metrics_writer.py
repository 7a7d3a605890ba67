"""Append-only CSV of per-step losses and checkpoint records."""

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Union

from ..domain.exceptions import CorruptArchiveError, MixedConfigHashError
from .logger import get_logger
from .objective import LossBreakdown

METRICS_SCHEMA_VERSION = 1
METRICS_COLUMNS = [
    "schema",
    "kind",
    "step",
    "total",
    "recon",
    "div",
    "fidelity",
    "converged",
    "wall_clock",
    "sha256",
    "config_hash",
]
# Columns that legitimately differ between otherwise identical runs
VOLATILE_COLUMNS = ("wall_clock",)


@dataclass
class MetricsRow:
    """One parsed CSV row."""

    kind: str
    step: int
    values: Dict[str, str]

    def number(self, column: str) -> float:
        return float(self.values[column])


def _format(value: float) -> str:
    return repr(float(value))


class MetricsWriter:
    """
    Appends rows to a metrics CSV stamped with one config hash.

    Opening an existing file checks its header and config hash, so a resumed
    run keeps appending to its own history and never to a foreign one.
    """

    def __init__(
        self, path: Union[str, Path], config_hash: str, append: bool = True
    ) -> None:
        """
        Args:
            path: CSV file
            config_hash: Hash stamped into every row
            append: Continue an existing file instead of starting a new one
        """
        self.path = Path(path)
        self.config_hash = config_hash
        self.logger = get_logger(__name__)
        self._prepare(append)

    def _prepare(self, append: bool) -> None:
        if append and self.path.exists() and self.path.stat().st_size > 0:
            rows = read_metrics(self.path)
            hashes = {row.values["config_hash"] for row in rows}
            if hashes and hashes != {self.config_hash}:
                raise MixedConfigHashError(
                    f"{self.path} belongs to config {sorted(hashes)[0][:12]}, "
                    f"not {self.config_hash[:12]}"
                )
            self.logger.debug(f"Appending to {self.path} ({len(rows)} existing rows)")
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "w", newline="", encoding="utf-8") as f:
            csv.writer(f, lineterminator="\n").writerow(METRICS_COLUMNS)

    def _append(self, row: Dict[str, str]) -> None:
        row = {
            "schema": str(METRICS_SCHEMA_VERSION),
            "config_hash": self.config_hash,
            **row,
        }
        with open(self.path, "a", newline="", encoding="utf-8") as f:
            csv.writer(f, lineterminator="\n").writerow(
                [row.get(column, "") for column in METRICS_COLUMNS]
            )

    def log_step(self, step: int, losses: LossBreakdown, wall_clock: float) -> None:
        """Record the loss terms of one optimization step."""
        values = losses.as_dict()
        self._append(
            {
                "kind": "step",
                "step": str(step),
                "total": _format(values["total"]),
                "recon": _format(values["recon"]),
                "div": _format(values["div"]),
                "fidelity": _format(values["fidelity"]),
                "converged": "1" if losses.divergence_converged else "0",
                "wall_clock": f"{wall_clock:.3f}",
            }
        )

    def log_checkpoint(self, step: int, sha256: str, wall_clock: float) -> None:
        """Record the SHA-256 of a checkpoint written after ``step`` steps."""
        self._append(
            {
                "kind": "checkpoint",
                "step": str(step),
                "sha256": sha256,
                "wall_clock": f"{wall_clock:.3f}",
            }
        )


def read_metrics(path: Union[str, Path]) -> List[MetricsRow]:
    """
    Parse a metrics CSV.

    Raises:
        CorruptArchiveError: If the header does not match schema v1
    """
    path = Path(path)
    with open(path, "r", newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != METRICS_COLUMNS:
            raise CorruptArchiveError(
                f"{path} does not have the metrics schema "
                f"v{METRICS_SCHEMA_VERSION} header"
            )
        rows = []
        for values in reader:
            if values.get("schema") != str(METRICS_SCHEMA_VERSION):
                raise CorruptArchiveError(
                    f"{path}: unsupported schema {values.get('schema')!r}"
                )
            rows.append(
                MetricsRow(kind=values["kind"], step=int(values["step"]), values=values)
            )
    return rows


def metrics_config_hash(path: Union[str, Path]) -> Optional[str]:
    """The single config hash of a metrics file, None for a file without rows."""
    hashes = {row.values["config_hash"] for row in read_metrics(path)}
    if len(hashes) > 1:
        raise MixedConfigHashError(f"{path} mixes config hashes {sorted(hashes)}")
    return next(iter(hashes), None)


def stable_view(path: Union[str, Path]) -> List[List[str]]:
    """Rows without the volatile columns, for comparing runs."""
    keep = [c for c in METRICS_COLUMNS if c not in VOLATILE_COLUMNS]
    return [[row.values[c] for c in keep] for row in read_metrics(path)]
