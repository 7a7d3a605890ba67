"""Tests for the command-line interface."""

import json
from pathlib import Path
from typing import Any, Dict, List

import click
import pytest
from click.testing import CliRunner, Result

from paired_wae import __version__
from paired_wae.entrypoints.cli import cli
from paired_wae.entrypoints.cli.sample import parse_sigmas


def _invoke(args: List[str]) -> Result:
    return CliRunner().invoke(cli, args)


def _error_line(output: str) -> Dict[str, Any]:
    lines = [line for line in output.splitlines() if line.startswith('{"error"')]
    assert lines, output
    return json.loads(lines[-1])


@pytest.fixture
def trained_checkpoint(tiny_config_file: Path, tmp_path: Path) -> Path:
    out = tmp_path / "cli_run"
    result = _invoke(
        [
            "train",
            "--config",
            str(tiny_config_file),
            "--out",
            str(out),
            "--max-workers",
            "1",
        ]
    )
    assert result.exit_code == 0, result.output
    return out / "checkpoint.zip"


class TestCli:
    """Test cases for the CLI group."""

    def test_version(self) -> None:
        result = _invoke(["--version"])
        assert result.exit_code == 0
        assert __version__ in result.output

    def test_help_lists_commands(self) -> None:
        result = _invoke([])
        assert result.exit_code == 0
        for command in ("train", "sample", "evaluate", "plot"):
            assert command in result.output


class TestTrainCommand:
    """Test cases for the train command."""

    def test_trains_from_config(self, trained_checkpoint: Path) -> None:
        assert trained_checkpoint.exists()
        assert (trained_checkpoint.parent / "metrics.csv").exists()
        assert (trained_checkpoint.parent / "config.json").exists()

    def test_prints_summary(self, tiny_config_file: Path, tmp_path: Path) -> None:
        result = _invoke(
            ["train", "-c", str(tiny_config_file), "-o", str(tmp_path / "o"), "-s", "3"]
        )
        assert result.exit_code == 0, result.output
        assert "=== Training Results ===" in result.output
        assert "Steps: 4" in result.output

    def test_invalid_config_exits_with_two(
        self, tiny_tree: Dict[str, Any], tmp_path: Path
    ) -> None:
        tiny_tree["train"]["lambda1"] = -1
        tiny_tree["latent"]["d2"] = -3
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(tiny_tree), encoding="utf-8")
        result = _invoke(["train", "--config", str(path)])
        assert result.exit_code == 2
        error = _error_line(result.output)
        assert error["error"] == "ConfigValidationError"
        assert any(field.startswith("train.lambda1") for field in error["fields"])
        assert any(field.startswith("latent") for field in error["fields"])

    def test_task_must_match_config(self, tiny_config_file: Path) -> None:
        args = ["train", "--task", "inpaint", "--config", str(tiny_config_file)]
        result = _invoke(args)
        assert result.exit_code == 2
        assert "task.kind" in _error_line(result.output)["fields"][0]

    def test_needs_task_or_config(self) -> None:
        result = _invoke(["train"])
        assert result.exit_code == 2
        assert "Provide --task or --config" in result.output

    def test_missing_config_file(self, tmp_path: Path) -> None:
        result = _invoke(["train", "--config", str(tmp_path / "missing.json")])
        assert result.exit_code == 2

    def test_mnist_preset_without_data(self, tmp_path: Path) -> None:
        if (Path("data") / "mnist").exists():
            pytest.skip("MNIST is available locally")
        result = _invoke(["train", "--task", "denoise", "--out", str(tmp_path / "run")])
        assert result.exit_code == 1
        assert _error_line(result.output)["error"] in (
            "ConfigurationError",
            "FileNotFoundError",
        )


class TestSampleCommand:
    """Test cases for the sample command."""

    def test_samples(self, trained_checkpoint: Path, tmp_path: Path) -> None:
        out = tmp_path / "samples"
        result = _invoke(
            [
                "sample",
                "--checkpoint",
                str(trained_checkpoint),
                "--condition-input",
                "0",
                "-n",
                "8",
                "--sigmas",
                "-1,0,1",
                "--axis",
                "1",
                "--out",
                str(out),
            ]
        )
        assert result.exit_code == 0, result.output
        assert "Perturbed axis: 1" in result.output
        assert (out / "samples.pwa").exists()
        assert (out / "scatter.png").exists()

    def test_missing_checkpoint(self, tmp_path: Path) -> None:
        result = _invoke(["sample", "-k", str(tmp_path / "none.zip"), "-i", "0"])
        assert result.exit_code == 2

    def test_bad_condition(self, trained_checkpoint: Path) -> None:
        result = _invoke(["sample", "-k", str(trained_checkpoint), "-i", "not-a-file"])
        assert result.exit_code == 1
        assert _error_line(result.output)["error"] == "ValueError"

    def test_parse_sigmas(self) -> None:
        assert parse_sigmas("-1, 0,0.5") == (-1.0, 0.0, 0.5)
        with pytest.raises(click.BadParameter):
            parse_sigmas("a,b")


class TestEvaluateAndPlotCommands:
    """Test cases for the evaluate and plot commands."""

    def test_evaluate(self, trained_checkpoint: Path) -> None:
        result = _invoke(["evaluate", "--checkpoint", str(trained_checkpoint)])
        assert result.exit_code == 0, result.output
        assert "=== Evaluation Results ===" in result.output
        report = json.loads((trained_checkpoint.parent / "evaluation.json").read_text())
        assert "w2_to_posterior" in report["metrics"]

    def test_evaluate_refuses_foreign_metrics(
        self, trained_checkpoint: Path, tmp_path: Path
    ) -> None:
        foreign = tmp_path / "foreign.csv"
        lines = (trained_checkpoint.parent / "metrics.csv").read_text().splitlines()
        rows = [lines[0]] + [
            ",".join(line.split(",")[:-1] + ["0" * 64]) for line in lines[1:]
        ]
        foreign.write_text("\n".join(rows) + "\n")
        result = _invoke(
            ["evaluate", "-k", str(trained_checkpoint), "--metrics", str(foreign)]
        )
        assert result.exit_code == 1
        assert _error_line(result.output)["error"] == "MixedConfigHashError"

    def test_plot(self, trained_checkpoint: Path, tmp_path: Path) -> None:
        for index in ("0", "1"):
            sampled = _invoke(
                [
                    "sample",
                    "-k",
                    str(trained_checkpoint),
                    "-i",
                    index,
                    "-n",
                    "4",
                    "-o",
                    str(tmp_path / "samples" / index),
                ]
            )
            assert sampled.exit_code == 0, sampled.output
        out = tmp_path / "figure.png"
        result = _invoke(["plot", "-d", str(tmp_path / "samples"), "-o", str(out)])
        assert result.exit_code == 0, result.output
        assert "Rendered 2 row(s)" in result.output
        assert out.exists()
