"""Tree formatting for run summaries and reports."""

from typing import Any

from swaflat.charts_ascii import create_loss_chart
from swaflat.format_utils import (
    EXCLUDE_FIELDS,
    calculate_max_position,
    format_scalar,
    humanize_key,
    sort_dict_keys,
)

CHART_FIELDS = {"train_loss_curve"}


def _dotted(prefix: str, label: str, value: Any, max_position: int) -> str:
    # Minimum 3 dots, one space before the dots.
    dots_needed = max(max_position - (len(prefix) + len(label)) + 3, 3)
    return f"{prefix}{label} {'.' * dots_needed} {format_scalar(value)}"


def format_tree(data: Any, indent: int = 0, max_position: int | None = None) -> str:
    """
    Format data as tree structure with human-friendly formatting.

    Scalars line up on dot leaders, nested dicts indent, lists of scalars are
    joined on one line and loss curves render as Braille charts.

    Args:
        data: Data to format
        indent: Current indentation level
        max_position: Maximum position (calculated once for entire structure)

    Returns:
        Formatted string
    """
    if max_position is None:
        max_position = calculate_max_position(data)

    lines: list[str] = []
    prefix = "  " * indent

    if isinstance(data, dict):
        for key in sort_dict_keys(data):
            if key in EXCLUDE_FIELDS:
                continue
            value = data[key]
            human_key = humanize_key(str(key))

            if isinstance(value, (dict, list)) and not value:
                continue
            if key in CHART_FIELDS and isinstance(value, list):
                lines.append(f"{prefix}{human_key}")
                chart_prefix = "  " * (indent + 1)
                for chart_line in create_loss_chart(value).split("\n"):
                    lines.append(f"{chart_prefix}{chart_line}")
            elif isinstance(value, list) and not any(isinstance(v, (dict, list)) for v in value):
                joined = ", ".join(format_scalar(v) for v in value)
                lines.append(_dotted(prefix, human_key, joined, max_position))
            elif isinstance(value, (dict, list)):
                lines.append(f"{prefix}{human_key}")
                lines.append(format_tree(value, indent + 1, max_position=max_position))
            else:
                lines.append(_dotted(prefix, human_key, value, max_position))

    elif isinstance(data, list):
        for item in data:
            if isinstance(item, (dict, list)):
                lines.append(format_tree(item, indent, max_position=max_position))
                lines.append("")
            else:
                lines.append(f"{prefix}{format_scalar(item)}")
        while lines and lines[-1] == "":
            lines.pop()
    else:
        lines.append(f"{prefix}{format_scalar(data)}")

    return "\n".join(lines)
