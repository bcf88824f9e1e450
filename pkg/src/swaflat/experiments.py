"""Experiment commands: configured runs that write self-describing run directories.

Run layout::

    <output_dir>/<command>-<digest[:12]>/
        config.env            resolved config (re-runnable)
        run.json              per-seed summaries and aggregates
        seed-<seed>/
            final.swck        last iterate (+ .json metadata)
            swa.swck          averaged weights (swa-train)
            collections/      stage-2 start and every collected component
            metrics.json      per-step and per-evaluation records
            timings.json      wall-clock of the optimizer loop per phase
            summary.json      evaluations, digests and versions

Everything except ``timings.json`` and the ``created_at`` stamp of checkpoint
metadata is a deterministic function of the config and seed.
"""

from __future__ import annotations

import hashlib
import json
import logging
import platform
import statistics
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, TypeVar

import numpy as np
from tabulate import tabulate

from swaflat import __version__
from swaflat.checkpoint import (
    CheckpointMetadata,
    read_checkpoint,
    read_metadata,
    write_checkpoint,
)
from swaflat.config import ExperimentConfig, ScheduleVariant
from swaflat.datasets import Dataset
from swaflat.errors import ConfigError
from swaflat.flatness import flatness_report
from swaflat.params import GroupMask, ParamVector
from swaflat.swa import SwaResult, soup_average, swa_train
from swaflat.training import TrainResult, train

logger = logging.getLogger(__name__)

MIN_COMPARE_SEEDS = 3
MIN_COMPARE_VARIANTS = 2
OVERHEAD_REPEATS = 5
# Wall-clock values and plotting series stay out of run.json
UNSTABLE_FIELDS = ("loop_seconds", "relative_time", "train_loss_curve")

T = TypeVar("T")


def versions() -> dict[str, str]:
    return {"swaflat": __version__, "numpy": np.__version__, "python": platform.python_version()}


def _dump_json(path: Path, data: Any) -> Path:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return path


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run_directory(config: ExperimentConfig, command: str) -> Path:
    """Create (if needed) the run root for ``command`` and store the config copy."""
    root = config.output_dir / f"{command}-{config.digest()[:12]}"
    root.mkdir(parents=True, exist_ok=True)
    (root / "config.env").write_text(config.to_env_text())
    return root


def _map(
    config: ExperimentConfig, job: Callable[..., T], args: Sequence[tuple[Any, ...]]
) -> list[T]:
    """Run ``job(*a)`` for every ``a``; results keep the order of ``args``."""
    workers = int(config["run.workers"])
    if workers > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(job, *a) for a in args]
            return [future.result() for future in futures]
    return [job(*a) for a in args]


def _evaluation_block(evaluations: dict[str, dict[str, float]]) -> dict[str, dict[str, float]]:
    return {split: dict(values) for split, values in evaluations.items()}


def _write_seed_outputs(
    config: ExperimentConfig,
    command: str,
    seed: int,
    directory: Path,
    result: TrainResult,
    extra: dict[str, Any],
) -> dict[str, Any]:
    digest = config.digest()
    final = write_checkpoint(
        directory / "final.swck",
        result.final,
        CheckpointMetadata.now(config.total_steps, seed, digest),
    )
    metrics = _dump_json(directory / "metrics.json", result.metrics.to_dict())
    _dump_json(directory / "timings.json", {"loop_seconds": result.timings})
    checkpoints = {"final": _sha256(final)}
    if isinstance(result, SwaResult) and result.swa is not None:
        swa = write_checkpoint(
            directory / "swa.swck",
            result.swa,
            CheckpointMetadata.now(config.total_steps, seed, digest),
        )
        checkpoints["swa"] = _sha256(swa)
    summary: dict[str, Any] = {
        "command": command,
        "seed": seed,
        "config_digest": digest,
        "versions": versions(),
        "total_steps": config.total_steps,
        "final": _evaluation_block(result.final_eval),
        "checkpoint_sha256": checkpoints,
        **extra,
    }
    summary["summary_digest"] = hashlib.sha256(
        json.dumps(
            {"checkpoints": checkpoints, "metrics": _sha256(metrics), "summary": summary},
            sort_keys=True,
        ).encode("utf-8")
    ).hexdigest()
    _dump_json(directory / "summary.json", summary)
    return summary


def _train_seed(config: ExperimentConfig, seed: int, root: Path) -> dict[str, Any]:
    directory = root / f"seed-{seed}"
    directory.mkdir(parents=True, exist_ok=True)
    data = config.build_dataset(seed)
    result = train(
        config.model,
        data,
        config.build_optimizer(),
        config.pre_schedule(),
        config.total_steps,
        seed,
        batch_size=config["data.batch_size"],
        eval_every=config["run.eval_every"],
    )
    summary = _write_seed_outputs(config, "train", seed, directory, result, {})
    summary["loop_seconds"] = _loop_seconds(result)
    summary["train_loss_curve"] = result.metrics.train_losses()
    return summary


def _swa_seed(
    config: ExperimentConfig, seed: int, root: Path, measure_overhead: bool
) -> dict[str, Any]:
    directory = root / f"seed-{seed}"
    directory.mkdir(parents=True, exist_ok=True)
    data = config.build_dataset(seed)
    digest = config.digest()
    collections = directory / "collections"

    def save_component(index: int, global_step: int, w: ParamVector) -> None:
        write_checkpoint(
            collections / f"c-{index:04d}.swck",
            w,
            CheckpointMetadata.now(global_step, seed, digest),
        )

    result = swa_train(
        config.model,
        data,
        config.build_optimizer(),
        config.pre_schedule(),
        config.swa_policy(),
        config.total_steps,
        seed,
        batch_size=config["data.batch_size"],
        eval_every=config["run.eval_every"],
        on_component=save_component if config["swa.save_collections"] else None,
    )
    assert result.state is not None
    extra: dict[str, Any] = {
        "swa": _evaluation_block(result.swa_eval),
        "n_model": result.state.n_model,
        "stage1_steps": result.stage1_steps,
        "collection_steps": result.collection_steps,
    }
    summary = _write_seed_outputs(config, "swa-train", seed, directory, result, extra)
    summary["loop_seconds"] = _loop_seconds(result)
    summary["train_loss_curve"] = result.metrics.train_losses()
    if measure_overhead:
        summary["relative_time"] = _relative_time(config, data, seed)
        logger.info("Seed %d: SWA loop time %.2fx plain", seed, summary["relative_time"])
    return summary


def _loop_seconds(result: TrainResult) -> float:
    return sum(result.timings.values())


def _relative_time(config: ExperimentConfig, data: Dataset, seed: int) -> float:
    """Median SWA/plain loop-time ratio over ``OVERHEAD_REPEATS`` same-seed pairs.

    Odd repeats run the plain loop first, even repeats the SWA loop.
    """
    batch_size = config["data.batch_size"]

    def swa_seconds() -> float:
        result = swa_train(
            config.model,
            data,
            config.build_optimizer(),
            config.pre_schedule(),
            config.swa_policy(),
            config.total_steps,
            seed,
            batch_size=batch_size,
        )
        return _loop_seconds(result)

    def plain_seconds() -> float:
        result = train(
            config.model,
            data,
            config.build_optimizer(),
            config.pre_schedule(),
            config.total_steps,
            seed,
            batch_size=batch_size,
        )
        return _loop_seconds(result)

    ratios = []
    for repeat in range(OVERHEAD_REPEATS):
        if repeat % 2:
            plain = plain_seconds()
            averaged = swa_seconds()
        else:
            averaged = swa_seconds()
            plain = plain_seconds()
        ratios.append(averaged / plain if plain > 0 else float("nan"))
    logger.debug("Seed %d overhead ratios: %s", seed, ", ".join(f"{r:.3f}" for r in ratios))
    return statistics.median(ratios)


def _aggregate(summaries: list[dict[str, Any]], weights: Sequence[str]) -> dict[str, Any]:
    aggregate: dict[str, Any] = {}
    for name in weights:
        for split in ("train", "test"):
            for metric in ("loss", "accuracy", "rmse"):
                values = [
                    s[name][split][metric]
                    for s in summaries
                    if split in s.get(name, {}) and metric in s[name][split]
                ]
                if values:
                    aggregate[f"{name}_{split}_{metric}_mean"] = statistics.fmean(values)
    times = [s["relative_time"] for s in summaries if "relative_time" in s]
    if times:
        aggregate["relative_time_median"] = statistics.median(times)
    return aggregate


def _finish_run(
    root: Path, config: ExperimentConfig, command: str, summaries: list[dict[str, Any]]
) -> dict[str, Any]:
    weights = ("final", "swa") if command == "swa-train" else ("final",)
    deterministic = [
        {k: v for k, v in s.items() if k not in UNSTABLE_FIELDS} for s in summaries
    ]
    _dump_json(
        root / "run.json",
        {
            "command": command,
            "config_digest": config.digest(),
            "versions": versions(),
            "seeds": deterministic,
        },
    )
    report = {
        "command": command,
        "run_dir": str(root),
        "config_digest": config.digest(),
        **_aggregate(summaries, weights),
        "seeds": summaries,
    }
    logger.info("Run directory: %s", root)
    return report


def cmd_train(config: ExperimentConfig) -> dict[str, Any]:
    """Plain fine-tuning for every configured seed."""
    root = run_directory(config, "train")
    summaries = _map(config, _train_seed, [(config, seed, root) for seed in config.seeds])
    return _finish_run(root, config, "train", summaries)


def cmd_swa_train(config: ExperimentConfig, measure_overhead: bool = False) -> dict[str, Any]:
    """SWA fine-tuning for every configured seed (both final and averaged weights)."""
    if not config["swa.enabled"]:
        raise ConfigError("swa-train needs swa.enabled=true", key="swa.enabled")
    root = run_directory(config, "swa-train")
    jobs = [(config, seed, root, measure_overhead) for seed in config.seeds]
    summaries = _map(config, _swa_seed, jobs)
    return _finish_run(root, config, "swa-train", summaries)


def cmd_flatness(
    paths: Sequence[str | Path], config: ExperimentConfig, seed: int | None = None
) -> list[dict[str, Any]]:
    """Flatness report for each checkpoint, on the training split it was trained on.

    The dataset seed comes from ``seed``, else the checkpoint metadata, else
    the first configured seed.
    """
    reports = []
    excluded = config["flatness.exclude_groups"]
    for path in paths:
        w = read_checkpoint(path)
        metadata = read_metadata(path)
        run_seed = seed if seed is not None else metadata.seed if metadata else config.seeds[0]
        data = config.build_dataset(run_seed)
        mask = GroupMask.excluding(w, excluded)
        report = flatness_report(config.model, w, data, mask, config.flatness_config(run_seed))
        reports.append({"checkpoint": str(path), "seed": run_seed, **report.to_dict()})
    return reports


def cmd_soup(paths: Sequence[str | Path], out: str | Path) -> Path:
    """Average checkpoint files into ``out``."""
    averaged = soup_average(paths)
    metadata = [m for m in (read_metadata(p) for p in paths) if m is not None]
    digests = sorted({m.config_digest for m in metadata})
    digest = digests[0] if len(digests) == 1 else "soup:" + hashlib.sha256(
        "".join(digests).encode("utf-8")
    ).hexdigest()
    target = write_checkpoint(
        out,
        averaged,
        CheckpointMetadata.now(
            max((m.step for m in metadata), default=0),
            metadata[0].seed if metadata else 0,
            digest,
        ),
    )
    logger.info("Averaged %d checkpoints into %s", len(paths), target)
    return target


def _variant_seed(config: ExperimentConfig, variant: ScheduleVariant, seed: int) -> float:
    data = config.build_dataset(seed)
    result = swa_train(
        config.model,
        data,
        config.build_optimizer(),
        config.pre_schedule(),
        config.swa_policy(variant),
        config.total_steps,
        seed,
        batch_size=config["data.batch_size"],
    )
    split = "test" if "test" in result.swa_eval else "train"
    metrics = result.swa_eval[split]
    return metrics["accuracy"] if "accuracy" in metrics else metrics["rmse"]


def cmd_compare_schedules(config: ExperimentConfig) -> dict[str, Any]:
    """Final SWA test metric per stage-2 schedule variant, over several seeds."""
    variants: tuple[ScheduleVariant, ...] = config["compare.variants"]
    if len(variants) < MIN_COMPARE_VARIANTS:
        raise ConfigError(
            f"at least {MIN_COMPARE_VARIANTS} schedule variants are required",
            key="compare.variants",
        )
    if len(config.seeds) < MIN_COMPARE_SEEDS:
        raise ConfigError(
            f"schedule comparison needs at least {MIN_COMPARE_SEEDS} seeds, "
            f"got {len(config.seeds)}",
            key="run.seeds",
        )
    for variant in variants:
        try:
            config.swa_policy(variant).check_budget(config.total_steps)
        except (ValueError, ConfigError) as exc:
            raise ConfigError(f"variant {variant.name}: {exc}", key="compare.variants") from exc

    jobs = [(config, variant, seed) for variant in variants for seed in config.seeds]
    values = _map(config, _variant_seed, jobs)
    metric = "test_accuracy" if config.model.is_classifier else "test_rmse"
    rows = []
    for index, variant in enumerate(variants):
        chunk = values[index * len(config.seeds) : (index + 1) * len(config.seeds)]
        rows.append(
            {
                "name": variant.name,
                "schedule": config.stage2_schedule(variant).describe(),
                "start_fraction": config.start_fraction(variant),
                "mean": statistics.fmean(chunk),
                "std": statistics.stdev(chunk),
                "per_seed": dict(zip(map(str, config.seeds), chunk, strict=True)),
            }
        )
    report = {
        "command": "compare-schedules",
        "config_digest": config.digest(),
        "metric": metric,
        "seeds": list(config.seeds),
        "variants": rows,
    }
    root = run_directory(config, "compare-schedules")
    _dump_json(root / "comparison.json", report)
    (root / "comparison.txt").write_text(comparison_table(report) + "\n")
    report["run_dir"] = str(root)
    return report


def comparison_table(report: dict[str, Any]) -> str:
    """Aligned plain-text table of a schedule comparison."""
    rows = [
        [
            row["name"],
            row["schedule"],
            row["start_fraction"],
            row["mean"],
            row["std"],
            len(row["per_seed"]),
        ]
        for row in report["variants"]
    ]
    return tabulate(
        rows,
        headers=[
            "variant",
            "stage-2 schedule",
            "start",
            f"mean {report['metric']}",
            "std",
            "seeds",
        ],
        floatfmt=".4f",
    )
