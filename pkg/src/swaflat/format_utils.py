"""Core formatting utilities for reports and run summaries."""

from typing import Any

# Fields to exclude from tree output
EXCLUDE_FIELDS = {"collection_steps", "summary_digest", "checkpoint_sha256"}

# Field priority order (fields at top of list appear first)
FIELD_ORDER = [
    "command",
    "checkpoint",
    "name",
    "seed",
    "run_dir",
    "config_digest",
]

# Fields that should appear at the end
FIELD_ORDER_END = [
    "versions",
    "train_loss_curve",
    "seeds",
]

ABBREVIATIONS = {"SWA", "RMSE", "HVP", "SHA256", "ID", "STD", "DIR", "N"}


def humanize_key(key: str) -> str:
    """
    Convert key to human-readable format.

    - Replace underscores and dots with spaces
    - Capitalize first letter of each word
    - Capitalize abbreviations like SWA, RMSE, HVP

    Examples:
        >>> humanize_key("swa_test_accuracy_mean")
        'SWA Test Accuracy Mean'
    """
    words = key.replace("_", " ").replace(".", " ").split()
    result = []
    for word in words:
        upper_word = word.upper()
        result.append(upper_word if upper_word in ABBREVIATIONS else word.capitalize())
    return " ".join(result)


def sort_dict_keys(d: dict[str, Any]) -> list[str]:
    """Sort keys with priority fields first, then alphabetically, then end fields last."""
    priority_keys = [key for key in FIELD_ORDER if key in d]
    end_keys = [key for key in FIELD_ORDER_END if key in d]
    other_keys = sorted(key for key in d if key not in FIELD_ORDER and key not in FIELD_ORDER_END)
    return priority_keys + other_keys + end_keys


def _is_scalar_list(value: Any) -> bool:
    return isinstance(value, list) and not any(isinstance(v, (dict, list)) for v in value)


def calculate_max_position(data: Any, indent: int = 0) -> int:
    """
    Calculate the maximum position (indent + key length) across the entire data structure.

    Args:
        data: Data to analyze
        indent: Current indentation level

    Returns:
        Maximum position (indent chars + humanized key length)
    """
    max_pos = 0
    indent_chars = indent * 2

    if isinstance(data, dict):
        for key, value in data.items():
            if key in EXCLUDE_FIELDS:
                continue
            if not isinstance(value, (dict, list)) or _is_scalar_list(value):
                max_pos = max(max_pos, indent_chars + len(humanize_key(str(key))))
            else:
                max_pos = max(max_pos, calculate_max_position(value, indent + 1))
    elif isinstance(data, list):
        for item in data:
            if isinstance(item, (dict, list)):
                max_pos = max(max_pos, calculate_max_position(item, indent + 1))

    return max_pos


def format_scalar(value: Any) -> str:
    """Render a leaf value; floats keep six significant digits."""
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def flatten_record(data: dict[str, Any], prefix: str = "") -> dict[str, Any]:
    """Flatten nested dicts into dotted keys; lists of scalars are dropped.

    Examples:
        >>> flatten_record({"swa": {"test": {"accuracy": 0.9}}, "seed": 1})
        {'swa.test.accuracy': 0.9, 'seed': 1}
    """
    flat: dict[str, Any] = {}
    for key, value in data.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(flatten_record(value, f"{name}."))
        elif not isinstance(value, list):
            flat[name] = value
    return flat


def as_records(data: Any) -> list[dict[str, Any]]:
    """Rows for tabular formats: per-seed summaries, variants or the data itself."""
    if isinstance(data, dict):
        for key in ("seeds", "variants"):
            rows = data.get(key)
            if isinstance(rows, list) and rows and all(isinstance(row, dict) for row in rows):
                return [flatten_record(row) for row in rows]
        return [flatten_record(data)]
    if isinstance(data, list):
        return [flatten_record(row) if isinstance(row, dict) else {"value": row} for row in data]
    return [{"value": data}]
