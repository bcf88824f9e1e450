"""Shared utilities for chart generation."""


def bucket_regular_data(
    data: list[float],
    target_buckets: int,
    aggregation: str = "avg",
) -> list[float]:
    """Bucket a regular series (one value per step) into at most ``target_buckets`` buckets.

    Args:
        data: List of values
        target_buckets: Number of buckets to create
        aggregation: Aggregation method ('max', 'min' or 'avg')

    Returns:
        List of aggregated values per bucket
    """
    if not data:
        return []
    if aggregation not in ("max", "min", "avg"):
        raise ValueError(f"Unknown aggregation: {aggregation}")

    bucket_size = -(-len(data) // target_buckets)

    buckets = []
    for i in range(0, len(data), bucket_size):
        bucket = data[i : i + bucket_size]
        if aggregation == "max":
            buckets.append(max(bucket))
        elif aggregation == "min":
            buckets.append(min(bucket))
        else:
            buckets.append(sum(bucket) / len(bucket))

    return buckets[:target_buckets]


def create_step_labels(total_steps: int, width: int, every: int = 12) -> str:
    """X-axis line with the step reached at every ``every``-th character column.

    Labels are left-aligned on their column and never overlap.
    """
    line = [" "] * width
    for column in range(0, width, every):
        label = str(round(total_steps * column / width) + 1) if column else "1"
        if column + len(label) > width:
            break
        line[column : column + len(label)] = label
    return "".join(line).rstrip()
