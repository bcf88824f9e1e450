"""DataFrame formatting for reports."""

from typing import Any

import pandas as pd

from swaflat.format_utils import as_records


def to_dataframe(data: Any) -> pd.DataFrame:
    """One row per seed (run summaries), per variant (comparisons) or per report."""
    return pd.DataFrame(as_records(data))


def format_dataframe(data: Any) -> str:
    """
    Format data as pandas DataFrame.

    Args:
        data: Data to format (dict or list of dicts)

    Returns:
        DataFrame string representation
    """
    df = to_dataframe(data)
    if df.empty:
        return "No data"
    return str(df.to_string(index=False))
