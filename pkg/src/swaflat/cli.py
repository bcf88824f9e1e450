"""CLI application for swaflat."""

import json
import logging
from collections.abc import Callable, Iterator
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Literal

import typer
from rich.console import Console
from rich.logging import RichHandler

from swaflat import experiments
from swaflat.config import load_config, with_cli_overrides
from swaflat.errors import SwaflatError
from swaflat.formatters import format_output
from swaflat.llm_help import show_llm_help

logger = logging.getLogger(__name__)

EXIT_IO = 4

app = typer.Typer(
    help=(
        "Stochastic weight averaging and flatness diagnostics for small models.\n"
        "💡 LLMs/agents: run 'swaflat --ai-help' for detailed usage guidance."
    ),
    context_settings={"help_option_names": ["-h", "--help"]},
)


@app.callback(invoke_without_command=True)
def main_callback(
    ctx: typer.Context,
    ai_help: bool = typer.Option(
        False,
        "--ai-help",
        is_eager=True,
        help="Show comprehensive usage guide for LLMs/agents and exit.",
    ),
    ai_help_format: Literal["markdown", "json"] = typer.Option(
        "markdown",
        "--ai-help-format",
        help="Format for --ai-help output (markdown or json)",
        show_choices=True,
        case_sensitive=False,
    ),
) -> None:
    """Stochastic weight averaging and flatness diagnostics for small models."""
    if ai_help:
        typer.echo(show_llm_help(format_type=ai_help_format))
        raise typer.Exit()

    if ctx.invoked_subcommand is None:
        typer.echo(ctx.get_help())
        raise typer.Exit()


# Shared options
CONFIG_OPTION = typer.Option(
    None, "--config", "-c", help="Config file (default: $SWAFLAT_CONFIG or ./swaflat.env)"
)
SEED_OPTION = typer.Option(None, "--seed", help="Run only this seed (replaces run.seeds)")
OUT_OPTION = typer.Option(None, "--out", "-o", help="Output directory (replaces run.output_dir)")
QUIET_OPTION = typer.Option(False, "--quiet", "-q", help="Only log warnings and errors")
VERBOSE_OPTION = typer.Option(False, "--verbose", "-v", help="Log debug messages")
JSON_OPTION = typer.Option(False, "--json", help="Output as JSON")
TREE_OPTION = typer.Option(False, "--tree", help="Output as tree (default)")
TABLE_OPTION = typer.Option(False, "--table", help="Output as table")
DATAFRAME_OPTION = typer.Option(False, "--dataframe", help="Output as dataframe")


def get_output_format(
    json_flag: bool,
    tree_flag: bool,
    table_flag: bool,
    dataframe_flag: bool,
) -> str:
    """Determine output format from flags. Tree is default."""
    format_flags = [
        (json_flag, "json"),
        (tree_flag, "tree"),
        (table_flag, "table"),
        (dataframe_flag, "dataframe"),
    ]
    active_flags = [fmt for flag, fmt in format_flags if flag]

    if len(active_flags) > 1:
        raise typer.BadParameter(
            "Only one format flag can be specified at a time: "
            "--json, --tree, --table or --dataframe"
        )

    return active_flags[0] if active_flags else "tree"


def configure_logging(quiet: bool, verbose: bool) -> None:
    """Send log records to stderr through rich."""
    if quiet and verbose:
        raise typer.BadParameter("--quiet and --verbose cannot be combined")
    level = logging.WARNING if quiet else logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


@contextmanager
def clean_errors() -> Iterator[None]:
    """Turn library errors into a one-line message and the matching exit code."""
    try:
        yield
    except SwaflatError as exc:
        typer.echo(f"Error: {exc}", err=True)
        raise typer.Exit(exc.exit_code) from exc
    except OSError as exc:
        typer.echo(f"Error: {exc}", err=True)
        raise typer.Exit(EXIT_IO) from exc


def execute_run_command(
    run: Callable[..., dict[str, Any]],
    config_path: Path | None,
    seed: int | None,
    out: Path | None,
    output_format: str,
    **kwargs: Any,
) -> None:
    """Load the config, apply overrides, run and print the report."""
    with clean_errors():
        config = with_cli_overrides(load_config(config_path), seed=seed, out=out)
        logger.debug("Config digest %s", config.digest())
        report = run(config, **kwargs)
    typer.echo(format_output(report, output_format))


@app.command()
def train(
    config_path: Path | None = CONFIG_OPTION,
    seed: int | None = SEED_OPTION,
    out: Path | None = OUT_OPTION,
    quiet: bool = QUIET_OPTION,
    verbose: bool = VERBOSE_OPTION,
    json_flag: bool = JSON_OPTION,
    tree_flag: bool = TREE_OPTION,
    table_flag: bool = TABLE_OPTION,
    dataframe_flag: bool = DATAFRAME_OPTION,
) -> None:
    """Plain fine-tuning for every configured seed."""
    output_format = get_output_format(json_flag, tree_flag, table_flag, dataframe_flag)
    configure_logging(quiet, verbose)
    execute_run_command(experiments.cmd_train, config_path, seed, out, output_format)


@app.command(name="swa-train")
def swa_train(
    config_path: Path | None = CONFIG_OPTION,
    seed: int | None = SEED_OPTION,
    out: Path | None = OUT_OPTION,
    measure_overhead: bool = typer.Option(
        False, "--measure-overhead", help="Also time a same-seed plain run"
    ),
    quiet: bool = QUIET_OPTION,
    verbose: bool = VERBOSE_OPTION,
    json_flag: bool = JSON_OPTION,
    tree_flag: bool = TREE_OPTION,
    table_flag: bool = TABLE_OPTION,
    dataframe_flag: bool = DATAFRAME_OPTION,
) -> None:
    """Training with weight averaging; saves and evaluates both weight sets."""
    output_format = get_output_format(json_flag, tree_flag, table_flag, dataframe_flag)
    configure_logging(quiet, verbose)
    execute_run_command(
        experiments.cmd_swa_train,
        config_path,
        seed,
        out,
        output_format,
        measure_overhead=measure_overhead,
    )


@app.command()
def flatness(
    checkpoints: list[Path] = typer.Argument(..., help="Checkpoint files (.swck)"),
    config_path: Path | None = CONFIG_OPTION,
    seed: int | None = typer.Option(
        None, "--seed", help="Dataset and sampling seed (default: checkpoint metadata)"
    ),
    out: Path | None = typer.Option(None, "--out", "-o", help="Also write the JSON report here"),
    quiet: bool = QUIET_OPTION,
    verbose: bool = VERBOSE_OPTION,
    json_flag: bool = JSON_OPTION,
    tree_flag: bool = TREE_OPTION,
    table_flag: bool = TABLE_OPTION,
    dataframe_flag: bool = DATAFRAME_OPTION,
) -> None:
    """Largest Hessian eigenvalue and Hessian trace of each checkpoint."""
    output_format = get_output_format(json_flag, tree_flag, table_flag, dataframe_flag)
    configure_logging(quiet, verbose)
    with clean_errors():
        config = load_config(config_path)
        reports = experiments.cmd_flatness(checkpoints, config, seed=seed)
        if out is not None:
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_text(json.dumps(reports, indent=2, sort_keys=True) + "\n")
    typer.echo(format_output(reports, output_format))


@app.command()
def soup(
    checkpoints: list[Path] = typer.Argument(..., help="Checkpoint files to average"),
    out: Path = typer.Option(..., "--out", "-o", help="Averaged checkpoint to write"),
    quiet: bool = QUIET_OPTION,
    verbose: bool = VERBOSE_OPTION,
    json_flag: bool = JSON_OPTION,
    tree_flag: bool = TREE_OPTION,
    table_flag: bool = TABLE_OPTION,
    dataframe_flag: bool = DATAFRAME_OPTION,
) -> None:
    """Average checkpoint files (offline SWA) into one checkpoint."""
    output_format = get_output_format(json_flag, tree_flag, table_flag, dataframe_flag)
    configure_logging(quiet, verbose)
    with clean_errors():
        target = experiments.cmd_soup(checkpoints, out)
    report = {"checkpoint": str(target), "inputs": len(checkpoints)}
    typer.echo(format_output(report, output_format))


@app.command(name="compare-schedules")
def compare_schedules(
    config_path: Path | None = CONFIG_OPTION,
    seed: int | None = SEED_OPTION,
    out: Path | None = OUT_OPTION,
    quiet: bool = QUIET_OPTION,
    verbose: bool = VERBOSE_OPTION,
    json_flag: bool = JSON_OPTION,
    tree_flag: bool = TREE_OPTION,
    table_flag: bool = TABLE_OPTION,
    dataframe_flag: bool = DATAFRAME_OPTION,
) -> None:
    """Compare stage-2 schedules by their final SWA test metric over several seeds."""
    output_format = get_output_format(json_flag, tree_flag, table_flag, dataframe_flag)
    configure_logging(quiet, verbose)
    execute_run_command(experiments.cmd_compare_schedules, config_path, seed, out, output_format)


def main() -> None:
    """Main entry point for the CLI."""
    app()


if __name__ == "__main__":
    main()
