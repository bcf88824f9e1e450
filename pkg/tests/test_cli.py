"""Tests for CLI module."""

import json
from collections.abc import Callable
from pathlib import Path
from unittest.mock import Mock, patch

import pytest
import typer
from typer.testing import CliRunner

from swaflat.checkpoint import read_checkpoint, write_checkpoint
from swaflat.cli import app, get_output_format
from swaflat.params import ParamVector

runner = CliRunner()

ConfigWriter = Callable[..., Path]


class TestHelp:
    """Tests for help output."""

    def test_no_command_shows_help(self) -> None:
        """Test running without a command prints help."""
        result = runner.invoke(app, [])
        assert result.exit_code == 0
        assert "swa-train" in result.output

    def test_ai_help_markdown(self) -> None:
        """Test --ai-help prints the markdown guide with config keys."""
        result = runner.invoke(app, ["--ai-help"])
        assert result.exit_code == 0
        assert "# swaflat Usage Guide for LLMs" in result.output
        assert "`swa.interval`" in result.output

    def test_ai_help_json(self) -> None:
        """Test --ai-help in JSON lists every command."""
        result = runner.invoke(app, ["--ai-help", "--ai-help-format", "json"])
        assert result.exit_code == 0
        spec = json.loads(result.output)
        assert spec["name"] == "swaflat"
        assert {c["name"] for c in spec["commands"]} == {
            "train",
            "swa-train",
            "flatness",
            "soup",
            "compare-schedules",
        }


class TestOutputFormat:
    """Tests for format flag handling."""

    def test_default_is_tree(self) -> None:
        """Test tree output when no flag is given."""
        assert get_output_format(False, False, False, False) == "tree"

    def test_single_flag(self) -> None:
        """Test a single format flag selects its format."""
        assert get_output_format(False, False, True, False) == "table"

    def test_conflicting_flags(self) -> None:
        """Test two format flags are rejected."""
        with pytest.raises(typer.BadParameter):
            get_output_format(True, True, False, False)

    def test_conflicting_flags_exit_code(self, write_config: ConfigWriter) -> None:
        """Test conflicting format flags exit with a usage error."""
        result = runner.invoke(app, ["train", "-c", str(write_config()), "--json", "--table"])
        assert result.exit_code == 2


class TestRunCommands:
    """Tests for train and swa-train."""

    @patch("swaflat.cli.experiments.cmd_train")
    def test_train_passes_overrides(
        self, mock_train: Mock, write_config: ConfigWriter, tmp_path: Path
    ) -> None:
        """Test --seed and --out override the loaded config."""
        mock_train.return_value = {"command": "train", "seeds": []}
        out = tmp_path / "elsewhere"
        result = runner.invoke(
            app, ["train", "-c", str(write_config()), "--seed", "4", "--out", str(out), "-q"]
        )
        assert result.exit_code == 0
        config = mock_train.call_args.args[0]
        assert config.seeds == (4,)
        assert config.output_dir == out

    def test_train_json(self, write_config: ConfigWriter) -> None:
        """Test train command with JSON output."""
        result = runner.invoke(
            app, ["train", "-c", str(write_config()), "--seed", "0", "--json", "--quiet"]
        )
        assert result.exit_code == 0
        report = json.loads(result.stdout)
        assert report["command"] == "train"
        assert [s["seed"] for s in report["seeds"]] == [0]
        assert Path(report["run_dir"], "seed-0", "final.swck").exists()

    def test_swa_train_tree(self, write_config: ConfigWriter) -> None:
        """Test swa-train command with tree output."""
        result = runner.invoke(app, ["swa-train", "-c", str(write_config()), "--seed", "1", "-q"])
        assert result.exit_code == 0
        assert "SWA Test Accuracy Mean" in result.stdout

    def test_compare_schedules_table(self, write_config: ConfigWriter) -> None:
        """Test compare-schedules command with table output."""
        path = write_config(
            run__seeds="0,1,2",
            compare__variants="a:cyclical:0.04:0.001:5|b:high-constant:0.02:0.02:1",
        )
        result = runner.invoke(app, ["compare-schedules", "-c", str(path), "--table", "-q"])
        assert result.exit_code == 0
        assert "cyclical(0.04->0.001, K=5)" in result.stdout


class TestExitCodes:
    """Tests for error reporting."""

    def test_unknown_config_key(self, write_config: ConfigWriter) -> None:
        """Test an unknown config key exits 2 and names the key."""
        result = runner.invoke(app, ["train", "-c", str(write_config(optim__colour="red"))])
        assert result.exit_code == 2
        assert "Error:" in result.output
        assert "optim.colour" in result.output

    def test_budget_error(self, write_config: ConfigWriter) -> None:
        """Test a step budget too small for averaging exits 2."""
        path = write_config(run__total_steps="8", swa__interval="5")
        result = runner.invoke(app, ["swa-train", "-c", str(path)])
        assert result.exit_code == 2

    def test_missing_config(self, tmp_path: Path) -> None:
        """Test a missing config file exits 2."""
        result = runner.invoke(app, ["train", "-c", str(tmp_path / "missing.env")])
        assert result.exit_code == 2

    def test_missing_checkpoint(self, tmp_path: Path) -> None:
        """Test a missing checkpoint exits 4."""
        result = runner.invoke(
            app, ["soup", str(tmp_path / "missing.swck"), "--out", str(tmp_path / "s.swck")]
        )
        assert result.exit_code == 4
        assert "Error:" in result.output

    def test_corrupt_checkpoint(self, tmp_path: Path) -> None:
        """Test a corrupt checkpoint exits 4."""
        path = tmp_path / "bad.swck"
        path.write_bytes(b"not a checkpoint")
        result = runner.invoke(app, ["soup", str(path), "--out", str(tmp_path / "s.swck")])
        assert result.exit_code == 4

    def test_layout_mismatch_is_numeric_failure(
        self, write_config: ConfigWriter, tmp_path: Path
    ) -> None:
        """Test a checkpoint that does not fit the model exits 3."""
        path = write_checkpoint(tmp_path / "small.swck", ParamVector([1.0, 2.0, 3.0]))
        result = runner.invoke(
            app, ["flatness", str(path), "-c", str(write_config()), "--seed", "0"]
        )
        assert result.exit_code == 3


class TestCheckpointCommands:
    """Tests for soup and flatness."""

    def test_soup(self, tmp_path: Path) -> None:
        """Test soup command averages its inputs."""
        a = write_checkpoint(tmp_path / "a.swck", ParamVector([1.0, 3.0]))
        b = write_checkpoint(tmp_path / "b.swck", ParamVector([3.0, 1.0]))
        out = tmp_path / "soup.swck"
        result = runner.invoke(app, ["soup", str(a), str(b), "--out", str(out), "--json", "-q"])
        assert result.exit_code == 0
        assert json.loads(result.stdout) == {"checkpoint": str(out), "inputs": 2}
        assert read_checkpoint(out).values.tolist() == [2.0, 2.0]

    def test_flatness_writes_report(self, write_config: ConfigWriter, tmp_path: Path) -> None:
        """Test flatness command writes the JSON report to --out."""
        config = write_config(run__seeds="0")
        runner.invoke(app, ["train", "-c", str(config), "-q"])
        checkpoint = next((tmp_path / "runs").glob("train-*/seed-0/final.swck"))
        out = tmp_path / "flatness.json"
        result = runner.invoke(
            app, ["flatness", str(checkpoint), "-c", str(config), "--out", str(out), "-q"]
        )
        assert result.exit_code == 0
        reports = json.loads(out.read_text())
        assert reports[0]["checkpoint"] == str(checkpoint)
        assert reports[0]["trace_samples"] == 8
        assert "Lambda Max" in result.stdout
