"""LLM help documentation for swaflat."""

import json
from typing import Any, Literal

from swaflat import __version__
from swaflat.config import SCHEMA


def _config_keys() -> list[dict[str, str]]:
    return [
        {"key": key, "default": field.default, "description": field.help}
        for key, field in SCHEMA.items()
    ]


def _get_spec_dict() -> dict[str, Any]:
    """Return dashdash-spec v0.2.0 compliant metadata."""
    return {
        "specVersion": "0.2.0",
        "name": "swaflat",
        "version": __version__,
        "description": (
            "Stochastic weight averaging (SWA) and Hessian flatness diagnostics "
            "for small fully connected models, with reproducible experiment runs."
        ),
        "usageContext": (
            "Use to train small models with or without weight averaging, average "
            "checkpoints, measure the largest Hessian eigenvalue and Hessian trace of "
            "saved weights, or compare stage-2 learning-rate schedules across seeds."
        ),
        "installation": {
            "method": "pip",
            "command": "pip install -e .[dev]",
            "notes": "Clone the repository first, then run `task py:install`.",
        },
        "configuration": {
            "format": "dotenv file of dotted keys (key=value), unknown keys rejected",
            "lookup": [
                "--config PATH",
                "SWAFLAT_CONFIG environment variable",
                "./swaflat.env",
                "~/.config/swaflat/swaflat.env",
            ],
            "overrides": ["--seed N replaces run.seeds", "--out DIR replaces run.output_dir"],
            "keys": _config_keys(),
        },
        "commands": [
            {
                "name": "train",
                "description": "Plain fine-tuning for every configured seed.",
                "examples": [
                    {
                        "command": "swaflat train --config moons.env --json",
                        "description": "Train and print the run summary as JSON",
                    },
                ],
            },
            {
                "name": "swa-train",
                "description": (
                    "Two-stage training; saves final.swck, swa.swck and the collected "
                    "components, and evaluates both weight sets."
                ),
                "examples": [
                    {
                        "command": "swaflat swa-train --config moons.env --seed 3",
                        "description": "One seed, tree summary with a loss chart",
                    },
                    {
                        "command": "swaflat swa-train --config moons.env --measure-overhead",
                        "description": "Also time a same-seed plain run",
                    },
                ],
            },
            {
                "name": "flatness",
                "description": "Largest Hessian eigenvalue and Hutchinson trace per checkpoint.",
                "examples": [
                    {
                        "command": (
                            "swaflat flatness runs/swa-train-*/seed-0/final.swck "
                            "runs/swa-train-*/seed-0/swa.swck --config moons.env --json"
                        ),
                        "description": "Compare the last iterate with the averaged weights",
                    },
                ],
                "notes": "flatness.exclude_groups drops named groups, e.g. layer0.weight.",
            },
            {
                "name": "soup",
                "description": "Average checkpoint files into a new checkpoint.",
                "examples": [
                    {
                        "command": "swaflat soup seed-0/collections/*.swck --out soup.swck",
                        "description": "Offline average of the collected components",
                    },
                ],
            },
            {
                "name": "compare-schedules",
                "description": (
                    "Mean and standard deviation of the final SWA test metric for each "
                    "compare.variants entry; needs 2+ variants and 3+ seeds."
                ),
                "examples": [
                    {
                        "command": "swaflat compare-schedules --config grid.env --table",
                        "description": "Comparison as an aligned table",
                    },
                ],
            },
        ],
        "outputFormats": {
            "description": "Commands print one report; only one format flag at a time.",
            "formats": [
                {"flag": "--tree", "default": True, "description": "Human-readable tree"},
                {"flag": "--json", "default": False, "description": "JSON (machine interface)"},
                {"flag": "--table", "default": False, "description": "Aligned table"},
                {"flag": "--dataframe", "default": False, "description": "Pandas DataFrame"},
            ],
            "recommendation": "Use --json for programmatic analysis.",
        },
        "exitCodes": [
            {"code": 0, "meaning": "success"},
            {"code": 2, "meaning": "configuration or usage error"},
            {"code": 3, "meaning": "numeric failure (NaN/Inf) or parameter layout mismatch"},
            {"code": 4, "meaning": "I/O error (missing or corrupt checkpoint, missing CSV)"},
        ],
        "bestPractices": [
            "Keep one config file per experiment; the digest in every output names it.",
            "Logs go to stderr; pass --quiet when piping --json output.",
            "Rerunning with the same config and seed reproduces checkpoints bit for bit.",
        ],
        "troubleshooting": [
            {
                "error": "swa: Stage 2 has N steps, fewer than the averaging interval",
                "cause": "run.total_steps * (1 - swa.start_fraction) < swa.interval.",
                "solution": "Raise run.total_steps or lower swa.interval.",
            },
            {
                "error": "unknown configuration key",
                "cause": "Typo in a dotted key.",
                "solution": "Check the key list in --ai-help.",
            },
        ],
    }


def _render_markdown(spec: dict[str, Any]) -> str:
    """Render dashdash-spec as markdown with YAML front matter."""
    front_matter = f"""---
name: {spec['name']}
version: {spec['version']}
specVersion: {spec['specVersion']}
usageContext: {spec['usageContext']}
---
"""
    config = spec["configuration"]
    body = [
        "# swaflat Usage Guide for LLMs",
        "",
        "## Overview",
        spec["description"],
        "",
        "## When To Use",
        spec["usageContext"],
        "",
        "## Installation",
        f"Method: {spec['installation']['method']}",
        f"Command: `{spec['installation']['command']}`",
        f"Notes: {spec['installation'].get('notes', '')}",
        "",
        "## Configuration",
        f"Format: {config['format']}",
        "Lookup order: " + "; ".join(config["lookup"]),
        "Overrides: " + "; ".join(config["overrides"]),
        "",
        "| key | default | description |",
        "| --- | --- | --- |",
    ]
    body.extend(
        f"| `{item['key']}` | `{item['default']}` | {item['description']} |"
        for item in config["keys"]
    )
    body.extend(
        [
            "",
            "## Output Formats",
            "- "
            + "\n- ".join(
                f"{fmt['flag']}{' (default)' if fmt.get('default') else ''} - {fmt['description']}"
                for fmt in spec["outputFormats"]["formats"]
            ),
            "",
            f"Recommendation: {spec['outputFormats']['recommendation']}",
            "",
            "## Exit Codes",
            "- " + "\n- ".join(f"{e['code']}: {e['meaning']}" for e in spec["exitCodes"]),
            "",
            "## Commands",
        ]
    )

    for cmd in spec["commands"]:
        body.extend([f"### {cmd['name']}", cmd["description"]])
        if cmd.get("notes"):
            body.append(f"Notes: {cmd['notes']}")
        if examples := cmd.get("examples"):
            body.append("Examples")
            body.append("```bash")
            body.extend(ex["command"] for ex in examples)
            body.append("```")
        body.append("")

    body.extend(
        [
            "## Best Practices",
            "- " + "\n- ".join(spec["bestPractices"]),
            "",
            "## Troubleshooting",
            "- " + "\n- ".join(f"{t['error']}: {t['solution']}" for t in spec["troubleshooting"]),
        ]
    )

    return front_matter + "\n".join(body)


def show_llm_help(format_type: Literal["markdown", "json"] = "markdown") -> str:
    """Return usage guide per dashdash-spec v0.2.0 in the requested format."""
    spec = _get_spec_dict()
    if format_type.lower() == "json":
        return json.dumps(spec, indent=2)
    return _render_markdown(spec)
