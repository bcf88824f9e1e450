"""JSON formatting for reports."""

import json
import math
from typing import Any


def _plain(obj: Any) -> Any:
    # Non-finite floats are not valid JSON; they are emitted as null.
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def format_json(data: Any) -> str:
    """
    Format data as JSON with arrays of numbers on single lines.

    Loss curves and collection steps stay on one line each, so reports stay
    readable while remaining valid JSON with sorted keys.

    Args:
        data: Data to format

    Returns:
        JSON formatted string
    """
    parsed = json.loads(json.dumps(_plain(data), default=str, allow_nan=False))

    def custom_format(obj: Any, indent_level: int = 0) -> str:
        indent = "  " * indent_level
        next_indent = "  " * (indent_level + 1)

        if isinstance(obj, dict):
            if not obj:
                return "{}"
            lines = ["{"]
            items = sorted(obj.items())
            for i, (k, v) in enumerate(items):
                comma = "," if i < len(items) - 1 else ""
                formatted_value = custom_format(v, indent_level + 1)
                lines.append(f"{next_indent}{json.dumps(k)}: {formatted_value}{comma}")
            lines.append(f"{indent}}}")
            return "\n".join(lines)
        if isinstance(obj, list):
            if not obj:
                return "[]"
            if any(isinstance(item, (dict, list)) for item in obj):
                lines = ["["]
                for i, item in enumerate(obj):
                    comma = "," if i < len(obj) - 1 else ""
                    lines.append(f"{next_indent}{custom_format(item, indent_level + 1)}{comma}")
                lines.append(f"{indent}]")
                return "\n".join(lines)
            return json.dumps(obj)
        return json.dumps(obj)

    return custom_format(parsed)
