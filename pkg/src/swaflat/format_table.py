"""Plain-text table formatting."""

from typing import Any

from tabulate import tabulate

from swaflat.format_utils import as_records, humanize_key

# Columns that only make sense in machine output
SKIP_COLUMNS = ("config_digest", "summary_digest", "versions.", "checkpoint_sha256.", "run_dir")


def format_table(data: Any, floatfmt: str = ".6g") -> str:
    """
    Format data as an aligned table, one row per record.

    Args:
        data: Data to format (dict or list of dicts)
        floatfmt: tabulate float format

    Returns:
        Table as a string
    """
    records = as_records(data)
    columns: list[str] = []
    for record in records:
        for key in record:
            if key not in columns and not key.startswith(SKIP_COLUMNS):
                columns.append(key)
    if not columns:
        return "No data"
    rows = [[record.get(column, "") for column in columns] for record in records]
    return tabulate(rows, headers=[humanize_key(c) for c in columns], floatfmt=floatfmt)
