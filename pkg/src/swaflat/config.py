"""Experiment configuration.

A config file is a flat dotenv document of dotted keys::

    model.layer_sizes=2,16,2
    optim.kind=adamw
    optim.lr=0.01
    swa.interval=10
    run.seeds=0,1,2,3,4

Every key has a type and a default (``SCHEMA``); unknown keys are rejected.
The digest of a config is the SHA-256 of its canonical form, so ``1e-2`` and
``0.01`` describe the same experiment.
"""

from __future__ import annotations

import hashlib
import json
import os
from collections.abc import Callable, Mapping
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from dotenv import dotenv_values

from swaflat.datasets import Dataset, gaussian_blobs, load_csv, two_moons
from swaflat.errors import BudgetError, ConfigError
from swaflat.flatness import FlatnessConfig
from swaflat.models import ModelSpec
from swaflat.optimizers import OPTIMIZER_KINDS, OptimizerState
from swaflat.schedules import SCHEDULE_KINDS, Schedule
from swaflat.swa import SwaPolicy

CONFIG_ENV_VAR = "SWAFLAT_CONFIG"
CONFIG_FILENAME = "swaflat.env"

# Keys that change where or how fast a run executes, not what it computes
NON_SEMANTIC_KEYS = frozenset({"run.output_dir", "run.workers", "flatness.workers"})


# -- value parsing ----------------------------------------------------------


def _parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


def _parse_optional(parse: Callable[[str], Any]) -> Callable[[str], Any]:
    def parser(raw: str) -> Any:
        return None if raw.strip() == "" else parse(raw)

    return parser


def _parse_choice(*choices: str) -> Callable[[str], str]:
    def parser(raw: str) -> str:
        value = raw.strip()
        if value not in choices:
            raise ValueError(f"expected one of {', '.join(choices)}, got {raw!r}")
        return value

    return parser


def _parse_ints(raw: str) -> tuple[int, ...]:
    return tuple(int(part) for part in raw.split(",") if part.strip())


def _parse_names(raw: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in raw.split(",") if part.strip())


def _parse_points(raw: str) -> tuple[tuple[float, ...], ...]:
    return tuple(
        tuple(float(x) for x in point.split(";")) for point in raw.split("|") if point.strip()
    )


@dataclass(frozen=True)
class ScheduleVariant:
    """One named stage-2 setup in a schedule comparison.

    ``start_fraction`` overrides ``swa.start_fraction`` for this variant when set.
    """

    name: str
    kind: str
    eta_max: float
    eta_min: float
    cycle_len: int
    start_fraction: float | None = None

    def schedule(self, total_steps: int) -> Schedule:
        return Schedule(
            self.kind,  # type: ignore[arg-type]
            self.eta_max,
            total_steps,
            self.eta_min,
            self.cycle_len,
        )


def _parse_variants(raw: str) -> tuple[ScheduleVariant, ...]:
    variants = []
    for item in raw.split("|"):
        if not item.strip():
            continue
        parts = item.strip().split(":")
        if len(parts) not in (5, 6):
            raise ValueError(
                f"expected name:kind:eta_max:eta_min:cycle_len[:start_fraction], got {item!r}"
            )
        name, kind, eta_max, eta_min, cycle_len = parts[:5]
        kind = _parse_choice(*SCHEDULE_KINDS)(kind)
        start = float(parts[5]) if len(parts) == 6 else None
        if start is not None and not 0.0 <= start < 1.0:
            raise ValueError(f"start_fraction must lie in [0, 1), got {start} in {item!r}")
        variants.append(
            ScheduleVariant(name, kind, float(eta_max), float(eta_min), int(cycle_len), start)
        )
    return tuple(variants)


def _format(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, ScheduleVariant):
        parts = [
            value.name,
            value.kind,
            repr(value.eta_max),
            repr(value.eta_min),
            str(value.cycle_len),
        ]
        if value.start_fraction is not None:
            parts.append(repr(value.start_fraction))
        return ":".join(parts)
    if isinstance(value, tuple):
        if value and isinstance(value[0], ScheduleVariant):
            return "|".join(_format(item) for item in value)
        if value and isinstance(value[0], tuple):
            return "|".join(";".join(repr(float(x)) for x in point) for point in value)
        return ",".join(str(item) for item in value)
    return str(value)


@dataclass(frozen=True)
class Field:
    parse: Callable[[str], Any]
    default: str
    help: str = ""


SCHEMA: dict[str, Field] = {
    "model.layer_sizes": Field(_parse_ints, "2,16,2", "layer sizes, input to output"),
    "model.activation": Field(_parse_choice("tanh", "relu"), "tanh"),
    "model.loss": Field(
        _parse_choice("softmax-cross-entropy", "mean-squared-error"), "softmax-cross-entropy"
    ),
    "model.l2_coeff": Field(float, "0.0", "coupled L2 penalty inside the loss"),
    "data.source": Field(_parse_choice("two_moons", "gaussian_blobs", "csv"), "two_moons"),
    "data.n": Field(int, "1000"),
    "data.noise_sd": Field(float, "0.2"),
    "data.centers": Field(_parse_points, "-1;0|1;0", "blob centers as x;y|x;y"),
    "data.sd": Field(float, "0.5"),
    "data.csv_path": Field(str, ""),
    "data.test_fraction": Field(float, "0.2"),
    "data.seed": Field(_parse_optional(int), "", "dataset seed; empty means the run seed"),
    "data.batch_size": Field(int, "32"),
    "optim.kind": Field(_parse_choice(*OPTIMIZER_KINDS), "adamw"),
    "optim.lr": Field(float, "0.01"),
    "optim.momentum": Field(float, "0.9", "sgd-momentum only"),
    "optim.beta1": Field(float, "0.9"),
    "optim.beta2": Field(float, "0.999"),
    "optim.eps": Field(float, "1e-08"),
    "optim.weight_decay": Field(
        _parse_optional(float), "", "decoupled decay; empty means 0.01 for adamw, else 0"
    ),
    "optim.clip_norm": Field(float, "0.0", "global-norm gradient clip; 0 disables"),
    "schedule.kind": Field(_parse_choice(*SCHEDULE_KINDS), "constant"),
    "schedule.eta_min": Field(float, "0.0"),
    "schedule.cycle_len": Field(int, "1"),
    "swa.enabled": Field(_parse_bool, "true"),
    "swa.start_fraction": Field(float, "0.5"),
    "swa.interval": Field(int, "10"),
    "swa.schedule.kind": Field(_parse_choice(*SCHEDULE_KINDS), "high-constant"),
    "swa.schedule.eta_max": Field(_parse_optional(float), "", "empty means optim.lr"),
    "swa.schedule.eta_min": Field(float, "0.0"),
    "swa.schedule.cycle_len": Field(int, "10"),
    "swa.save_collections": Field(_parse_bool, "true"),
    "run.total_steps": Field(int, "2000"),
    "run.eval_every": Field(int, "200", "0 disables periodic evaluation"),
    "run.seeds": Field(_parse_ints, "0"),
    "run.output_dir": Field(str, "runs"),
    "run.workers": Field(int, "1", "parallel seed workers"),
    "flatness.tol": Field(float, "1e-06"),
    "flatness.max_iter": Field(int, "500"),
    "flatness.samples": Field(int, "100"),
    "flatness.hvp_eps": Field(float, "0.0001"),
    "flatness.exclude_groups": Field(_parse_names, ""),
    "flatness.workers": Field(int, "1"),
    "compare.variants": Field(
        _parse_variants,
        "",
        "stage-2 setups as name:kind:eta_max:eta_min:cycle_len[:start_fraction]|...",
    ),
}


# -- typed config -----------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment configuration; ``values`` maps every schema key to its value."""

    values: Mapping[str, Any]
    model: ModelSpec

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    @property
    def seeds(self) -> tuple[int, ...]:
        return tuple(self.values["run.seeds"])

    @property
    def total_steps(self) -> int:
        return int(self.values["run.total_steps"])

    @property
    def output_dir(self) -> Path:
        return Path(self.values["run.output_dir"])

    def canonical(self) -> dict[str, str]:
        return {key: _format(self.values[key]) for key in sorted(SCHEMA)}

    def digest(self) -> str:
        """SHA-256 of the canonical config, ignoring output location and worker counts."""
        semantic = {k: v for k, v in self.canonical().items() if k not in NON_SEMANTIC_KEYS}
        payload = json.dumps(semantic, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def to_env_text(self) -> str:
        return "".join(f"{key}='{value}'\n" for key, value in self.canonical().items())

    def with_overrides(self, **overrides: Any) -> ExperimentConfig:
        """Copy with some keys replaced by already-typed values (``run.seeds`` etc.)."""
        unknown = set(overrides) - set(SCHEMA)
        if unknown:
            raise ConfigError("unknown configuration key", key=sorted(unknown)[0])
        values = {**self.values, **overrides}
        return _build({key: _format(value) for key, value in values.items()})

    # -- builders ---------------------------------------------------------

    def dataset_seed(self, run_seed: int) -> int:
        seed = self.values["data.seed"]
        return run_seed if seed is None else int(seed)

    def build_dataset(self, run_seed: int) -> Dataset:
        v = self.values
        seed = self.dataset_seed(run_seed)
        fraction = v["data.test_fraction"]
        if v["data.source"] == "two_moons":
            return two_moons(v["data.n"], v["data.noise_sd"], seed, fraction)
        if v["data.source"] == "gaussian_blobs":
            return gaussian_blobs(v["data.n"], v["data.centers"], v["data.sd"], seed, fraction)
        return load_csv(v["data.csv_path"], seed, fraction)

    def build_optimizer(self) -> OptimizerState:
        v = self.values
        hyper: dict[str, float] = {
            "beta1": v["optim.beta1"],
            "beta2": v["optim.beta2"],
            "eps": v["optim.eps"],
            "clip_norm": v["optim.clip_norm"],
        }
        if v["optim.kind"] == "sgd-momentum":
            hyper["momentum"] = v["optim.momentum"]
        if v["optim.weight_decay"] is not None:
            hyper["weight_decay"] = v["optim.weight_decay"]
        return OptimizerState.create(v["optim.kind"], **hyper)

    def pre_schedule(self) -> Schedule:
        v = self.values
        return Schedule(
            v["schedule.kind"],
            v["optim.lr"],
            self.total_steps,
            eta_min=v["schedule.eta_min"],
            cycle_len=v["schedule.cycle_len"],
        )

    def start_fraction(self, variant: ScheduleVariant | None = None) -> float:
        if variant is not None and variant.start_fraction is not None:
            return variant.start_fraction
        return float(self.values["swa.start_fraction"])

    def stage2_schedule(self, variant: ScheduleVariant | None = None) -> Schedule:
        policy_steps = self.total_steps - self._stage1_steps(variant)
        if variant is not None:
            return variant.schedule(policy_steps)
        v = self.values
        eta_max = v["swa.schedule.eta_max"]
        return Schedule(
            v["swa.schedule.kind"],
            v["optim.lr"] if eta_max is None else eta_max,
            policy_steps,
            eta_min=v["swa.schedule.eta_min"],
            cycle_len=v["swa.schedule.cycle_len"],
        )

    def _stage1_steps(self, variant: ScheduleVariant | None = None) -> int:
        fraction = self.start_fraction(variant)
        return SwaPolicy(1, Schedule.constant(0.0, 1), fraction).stage1_steps(self.total_steps)

    def swa_policy(self, variant: ScheduleVariant | None = None) -> SwaPolicy:
        return SwaPolicy(
            interval=self.values["swa.interval"],
            schedule=self.stage2_schedule(variant),
            start_fraction=self.start_fraction(variant),
        )

    def flatness_config(self, seed: int) -> FlatnessConfig:
        v = self.values
        return FlatnessConfig(
            tol=v["flatness.tol"],
            max_iter=v["flatness.max_iter"],
            samples=v["flatness.samples"],
            hvp_eps=v["flatness.hvp_eps"],
            seed=seed,
            workers=v["flatness.workers"],
        )


def _check(condition: bool, key: str, message: str) -> None:
    if not condition:
        raise ConfigError(message, key=key)


def _build(raw: Mapping[str, str | None]) -> ExperimentConfig:
    for key in raw:
        if key not in SCHEMA:
            raise ConfigError("unknown configuration key", key=key)
    values: dict[str, Any] = {}
    for key, field in SCHEMA.items():
        text = raw.get(key, field.default)
        if text is None:
            raise ConfigError("missing value (expected key=value)", key=key)
        try:
            values[key] = field.parse(text)
        except ValueError as exc:
            raise ConfigError(f"invalid value {text!r}: {exc}", key=key) from exc

    _check(values["run.total_steps"] >= 1, "run.total_steps", "must be positive")
    _check(values["run.eval_every"] >= 0, "run.eval_every", "must be non-negative")
    _check(len(values["run.seeds"]) >= 1, "run.seeds", "at least one seed is required")
    _check(min(values["run.seeds"]) >= 0, "run.seeds", "seeds must be non-negative")
    _check(values["run.workers"] >= 1, "run.workers", "must be at least 1")
    _check(values["data.batch_size"] >= 1, "data.batch_size", "must be positive")
    _check(values["data.n"] >= 2, "data.n", "at least 2 points are required")
    _check(values["optim.lr"] >= 0, "optim.lr", "must be non-negative")
    _check(
        values["data.source"] != "csv" or bool(values["data.csv_path"]),
        "data.csv_path",
        "required when data.source=csv",
    )
    _check(values["flatness.samples"] >= 1, "flatness.samples", "must be at least 1")
    _check(values["flatness.max_iter"] >= 1, "flatness.max_iter", "must be at least 1")
    _check(values["flatness.hvp_eps"] > 0, "flatness.hvp_eps", "must be positive")

    try:
        model = ModelSpec(
            layer_sizes=values["model.layer_sizes"],
            activation=values["model.activation"],
            loss_kind=values["model.loss"],
            l2_coeff=values["model.l2_coeff"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc), key="model") from exc
    config = ExperimentConfig(values=values, model=model)

    sections: list[tuple[str, Callable[[], Any]]] = [
        ("optim", config.build_optimizer),
        ("schedule", config.pre_schedule),
    ]
    if values["swa.enabled"]:
        sections.append(("swa", config.swa_policy))
    for name, build in sections:
        try:
            build()
        except ValueError as exc:
            raise ConfigError(str(exc), key=name) from exc
    if values["swa.enabled"]:
        try:
            config.swa_policy().check_budget(config.total_steps)
        except BudgetError as exc:
            raise BudgetError(str(exc), key="swa") from exc
    return config


def parse_config(raw: Mapping[str, str | None]) -> ExperimentConfig:
    """Validate a mapping of dotted keys to raw string values."""
    return _build(raw)


def find_config_path(explicit: str | Path | None = None) -> Path:
    """Locate the config file.

    Tries in order:
    1. the explicit path (``--config``)
    2. the ``SWAFLAT_CONFIG`` environment variable
    3. ./swaflat.env
    4. ~/.config/swaflat/swaflat.env
    """
    if explicit is not None:
        return Path(explicit)
    from_env = os.getenv(CONFIG_ENV_VAR)
    if from_env:
        return Path(from_env)
    for candidate in (
        Path.cwd() / CONFIG_FILENAME,
        Path.home() / ".config" / "swaflat" / CONFIG_FILENAME,
    ):
        if candidate.exists():
            return candidate
    raise ConfigError(
        "No config file found. Pass --config PATH, set SWAFLAT_CONFIG, "
        f"or create ./{CONFIG_FILENAME}"
    )


def load_config(path: str | Path | None = None) -> ExperimentConfig:
    """Read and validate a dotenv config file (see ``find_config_path``)."""
    resolved = find_config_path(path)
    if not resolved.is_file():
        raise ConfigError(f"Config file not found: {resolved}")
    return _build(dotenv_values(resolved, interpolate=False))


def with_cli_overrides(
    config: ExperimentConfig, seed: int | None = None, out: str | Path | None = None
) -> ExperimentConfig:
    """Apply ``--seed`` and ``--out``."""
    overrides: dict[str, Any] = {}
    if seed is not None:
        overrides["run.seeds"] = (seed,)
    if out is not None:
        overrides["run.output_dir"] = str(out)
    return config.with_overrides(**overrides) if overrides else config
