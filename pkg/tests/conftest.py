"""Shared fixtures: small, fast experiment configs."""

from collections.abc import Callable
from pathlib import Path

import pytest

from swaflat.config import ExperimentConfig, load_config

SMALL_CONFIG = {
    "model.layer_sizes": "2,8,2",
    "data.n": "120",
    "data.batch_size": "16",
    "optim.lr": "0.02",
    "swa.interval": "5",
    "swa.start_fraction": "0.5",
    "run.total_steps": "60",
    "run.eval_every": "20",
    "run.seeds": "0,1",
    "flatness.samples": "8",
    "flatness.max_iter": "50",
}

ConfigWriter = Callable[..., Path]


@pytest.fixture
def write_config(tmp_path: Path) -> ConfigWriter:
    """Write a small dotenv config (``SMALL_CONFIG`` plus overrides) and return its path."""

    def write(name: str = "swaflat.env", **overrides: str) -> Path:
        values = {**SMALL_CONFIG, "run.output_dir": str(tmp_path / "runs")}
        values.update({key.replace("__", "."): value for key, value in overrides.items()})
        path = tmp_path / name
        path.write_text("".join(f"{key}={value}\n" for key, value in values.items()))
        return path

    return write


@pytest.fixture
def small_config(write_config: ConfigWriter) -> ExperimentConfig:
    return load_config(write_config())
