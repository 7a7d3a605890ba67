"""Tests for the metrics CSV."""

from pathlib import Path

import pytest
import torch

from paired_wae.domain.exceptions import CorruptArchiveError, MixedConfigHashError
from paired_wae.infrastructure.metrics_writer import (
    METRICS_COLUMNS,
    MetricsWriter,
    metrics_config_hash,
    read_metrics,
    stable_view,
)
from paired_wae.infrastructure.objective import LossBreakdown


def _losses(total: float, converged: bool = True) -> LossBreakdown:
    return LossBreakdown(
        total=torch.tensor(total),
        reconstruction=0.5,
        divergence=0.25,
        fidelity=0.125,
        lambda1=1.0,
        lambda2=1.0,
        divergence_converged=converged,
    )


class TestMetricsWriter:
    """Test cases for MetricsWriter."""

    def test_header_and_rows(self, tmp_path: Path) -> None:
        path = tmp_path / "metrics.csv"
        writer = MetricsWriter(path, "hash-a")
        writer.log_step(1, _losses(2.0), wall_clock=0.1)
        writer.log_step(2, _losses(1.0, converged=False), wall_clock=0.2)
        writer.log_checkpoint(2, "f" * 64, wall_clock=0.3)

        assert path.read_text().splitlines()[0] == ",".join(METRICS_COLUMNS)
        rows = read_metrics(path)
        assert [row.kind for row in rows] == ["step", "step", "checkpoint"]
        assert rows[0].number("total") == 2.0
        assert rows[0].number("recon") == 0.5
        assert rows[1].values["converged"] == "0"
        assert rows[2].values["sha256"] == "f" * 64
        assert metrics_config_hash(path) == "hash-a"

    def test_resume_appends(self, tmp_path: Path) -> None:
        path = tmp_path / "metrics.csv"
        MetricsWriter(path, "hash-a").log_step(1, _losses(1.0), 0.0)
        MetricsWriter(path, "hash-a").log_step(2, _losses(0.5), 0.0)
        assert [row.step for row in read_metrics(path)] == [1, 2]

    def test_fresh_run_overwrites(self, tmp_path: Path) -> None:
        path = tmp_path / "metrics.csv"
        MetricsWriter(path, "hash-a").log_step(1, _losses(1.0), 0.0)
        MetricsWriter(path, "hash-b", append=False).log_step(1, _losses(3.0), 0.0)
        rows = read_metrics(path)
        assert len(rows) == 1
        assert rows[0].values["config_hash"] == "hash-b"

    def test_refuses_foreign_history(self, tmp_path: Path) -> None:
        path = tmp_path / "metrics.csv"
        MetricsWriter(path, "hash-a").log_step(1, _losses(1.0), 0.0)
        with pytest.raises(MixedConfigHashError):
            MetricsWriter(path, "hash-b")

    def test_stable_view_drops_wall_clock(self, tmp_path: Path) -> None:
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        MetricsWriter(first, "h").log_step(1, _losses(1.0), wall_clock=0.1)
        MetricsWriter(second, "h").log_step(1, _losses(1.0), wall_clock=9.9)
        assert first.read_text() != second.read_text()
        assert stable_view(first) == stable_view(second)

    def test_empty_file_has_no_hash(self, tmp_path: Path) -> None:
        path = tmp_path / "metrics.csv"
        MetricsWriter(path, "h")
        assert metrics_config_hash(path) is None

    def test_mixed_file_is_reported(self, tmp_path: Path) -> None:
        path = tmp_path / "metrics.csv"
        MetricsWriter(path, "hash-a").log_step(1, _losses(1.0), 0.0)
        with open(path, "a", encoding="utf-8") as f:
            f.write("1,step,2,1.0,1.0,0.0,0.0,1,0.0,,hash-b\n")
        with pytest.raises(MixedConfigHashError):
            metrics_config_hash(path)

    def test_wrong_header(self, tmp_path: Path) -> None:
        path = tmp_path / "other.csv"
        path.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(CorruptArchiveError):
            read_metrics(path)
