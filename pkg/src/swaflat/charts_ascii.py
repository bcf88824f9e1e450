"""ASCII/Braille chart generation for terminal output."""

import math

from swaflat.chart_utils import bucket_regular_data, create_step_labels

BRAILLE_BASE = 0x2800

# Dots are arranged: 1,2,3,7 (left column), 4,5,6,8 (right column)
#   1 • • 4
#   2 • • 5
#   3 • • 6
#   7 • • 8
# Patterns fill a column from the bottom up.
LEFT_PATTERNS = [
    0b00000000,  # 0: no dots
    0b01000000,  # 1: dot 7
    0b01000100,  # 2: dots 3,7
    0b01000110,  # 3: dots 2,3,7
    0b01000111,  # 4: dots 1,2,3,7
]
RIGHT_PATTERNS = [
    0b00000000,  # 0: no dots
    0b10000000,  # 1: dot 8
    0b10100000,  # 2: dots 6,8
    0b10110000,  # 3: dots 5,6,8
    0b10111000,  # 4: dots 4,5,6,8
]


def create_loss_chart(losses: list[float], width: int = 72, height: int = 10) -> str:
    """
    Create a Braille bar chart of a per-step training loss series.

    Each character packs two buckets, so ``width`` characters show
    ``2 * width`` bucket averages.

    Args:
        losses: One loss value per optimizer step
        width: Width of chart in characters
        height: Height of chart in characters

    Returns:
        Chart as a string, with loss labels on the Y axis and steps on the X axis
    """
    finite = [value for value in losses if math.isfinite(value)]
    if not finite:
        return "No loss data"

    buckets = bucket_regular_data(finite, target_buckets=width * 2, aggregation="avg")
    chart_width = (len(buckets) + 1) // 2
    return _create_chart_from_buckets(buckets, chart_width, height, len(losses))


def _column_dots(value: float, low: float, high: float, total_dots: int) -> int:
    # The minimum still shows one dot so flat series remain visible.
    if high <= low:
        return total_dots // 2
    return 1 + int((value - low) / (high - low) * (total_dots - 1))


def _pattern(filled: int, row_bottom: int, patterns: list[int]) -> int:
    if filled <= row_bottom:
        return patterns[0]
    if filled >= row_bottom + 4:
        return patterns[4]
    return patterns[filled - row_bottom]


def _create_chart_from_buckets(
    buckets: list[float], width: int, height: int, total_steps: int
) -> str:
    low = min(buckets)
    high = max(buckets)
    total_dots = height * 4

    y_labels = {}
    num_labels = min(5, height)
    for i in range(num_labels):
        row = int(i * (height - 1) / (num_labels - 1)) if num_labels > 1 else 0
        fraction = i / (num_labels - 1) if num_labels > 1 else 0.0
        y_labels[row] = f"{high - fraction * (high - low):.3g}"
    label_width = max(len(label) for label in y_labels.values())

    dots = [_column_dots(value, low, high, total_dots) for value in buckets]
    lines = []
    for row in range(height):
        label = y_labels.get(row, "").rjust(label_width)
        line = f"{label} │ "
        row_bottom = total_dots - (row + 1) * 4
        for i in range(0, len(dots), 2):
            left = _pattern(dots[i], row_bottom, LEFT_PATTERNS)
            right = _pattern(dots[i + 1], row_bottom, RIGHT_PATTERNS) if i + 1 < len(dots) else 0
            line += chr(BRAILLE_BASE + (left | right))
        lines.append(line)

    lines.append(" " * label_width + " └" + "─" * width)
    lines.append(" " * (label_width + 3) + create_step_labels(total_steps, width))
    return "\n".join(lines)
