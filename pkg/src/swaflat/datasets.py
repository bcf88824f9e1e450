"""Deterministic synthetic datasets, CSV ingestion and seeded mini-batching."""

from __future__ import annotations

import logging
import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from numpy.typing import NDArray

from swaflat import rng
from swaflat.errors import DataError
from swaflat.models import Batch
from swaflat.params import FloatArray

logger = logging.getLogger(__name__)

DEFAULT_TEST_FRACTION = 0.2


@dataclass(frozen=True, eq=False)
class Dataset:
    """Inputs, targets and a fixed train/test split."""

    inputs: FloatArray
    targets: NDArray[np.int64] | FloatArray
    train_indices: NDArray[np.int64]
    test_indices: NDArray[np.int64]
    seed: int
    num_classes: int = 0

    def __post_init__(self) -> None:
        n = self.inputs.shape[0]
        if self.targets.shape[0] != n:
            raise DataError(f"{n} input rows but {self.targets.shape[0]} targets")
        joined = np.concatenate([self.train_indices, self.test_indices])
        if joined.size != n or not np.array_equal(np.sort(joined), np.arange(n)):
            raise DataError("Train and test splits must be disjoint and cover every row")
        for array in (self.inputs, self.targets, self.train_indices, self.test_indices):
            array.flags.writeable = False

    @property
    def size(self) -> int:
        return int(self.inputs.shape[0])

    @property
    def is_classification(self) -> bool:
        return self.num_classes > 0

    def class_counts(self) -> list[int]:
        return np.bincount(self.targets, minlength=self.num_classes).tolist()

    def split(self, name: str) -> Batch:
        """The whole ``train`` or ``test`` split as one batch."""
        if name == "train":
            index = self.train_indices
        elif name == "test":
            index = self.test_indices
        else:
            raise ValueError(f"Unknown split: {name}")
        if index.size == 0:
            raise DataError(f"The {name} split is empty")
        return Batch(self.inputs[index], self.targets[index])

    def train_batch(self) -> Batch:
        return self.split("train")

    def test_batch(self) -> Batch:
        return self.split("test")


def _split_indices(n: int, test_fraction: float, seed: int) -> tuple[NDArray, NDArray]:
    if not 0.0 <= test_fraction < 1.0:
        raise DataError(f"test_fraction must lie in [0, 1), got {test_fraction}")
    order = rng.generator(seed, "split").permutation(n)
    n_test = int(round(test_fraction * n))
    if n - n_test < 1:
        n_test = n - 1
    return np.sort(order[n_test:]).astype(np.int64), np.sort(order[:n_test]).astype(np.int64)


def _classification(
    inputs: FloatArray, labels: NDArray, seed: int, test_fraction: float
) -> Dataset:
    train, test = _split_indices(inputs.shape[0], test_fraction, seed)
    labels = labels.astype(np.int64)
    return Dataset(
        inputs=inputs,
        targets=labels,
        train_indices=train,
        test_indices=test,
        seed=seed,
        num_classes=int(labels.max()) + 1,
    )


def two_moons(
    n: int, noise_sd: float, seed: int, test_fraction: float = DEFAULT_TEST_FRACTION
) -> Dataset:
    """Two interleaved half circles, ``n // 2`` points on the upper arc (label 0).

    Examples:
        >>> two_moons(1000, 0.2, 7).class_counts()
        [500, 500]
    """
    if n < 2:
        raise DataError(f"two_moons needs at least 2 points, got {n}")
    if noise_sd < 0:
        raise DataError(f"noise_sd must be non-negative, got {noise_sd}")
    n_upper = n // 2
    n_lower = n - n_upper
    upper = np.linspace(0.0, math.pi, n_upper)
    lower = np.linspace(0.0, math.pi, n_lower)
    inputs = np.vstack(
        [
            np.column_stack([np.cos(upper), np.sin(upper)]),
            np.column_stack([1.0 - np.cos(lower), 0.5 - np.sin(lower)]),
        ]
    )
    if noise_sd > 0:
        inputs = inputs + rng.generator(seed, "data").normal(0.0, noise_sd, size=inputs.shape)
    labels = np.concatenate([np.zeros(n_upper), np.ones(n_lower)])
    return _classification(inputs, labels, seed, test_fraction)


def gaussian_blobs(
    n: int,
    centers: Sequence[Sequence[float]],
    sd: float,
    seed: int,
    test_fraction: float = DEFAULT_TEST_FRACTION,
) -> Dataset:
    """Isotropic Gaussian clusters, one class per center, sizes differing by at most one."""
    if n < 2:
        raise DataError(f"gaussian_blobs needs at least 2 points, got {n}")
    if sd < 0:
        raise DataError(f"sd must be non-negative, got {sd}")
    center_array = np.asarray(centers, dtype=np.float64)
    if center_array.ndim != 2 or center_array.shape[0] < 1:
        raise DataError("centers must be a non-empty list of points of equal dimension")
    k = center_array.shape[0]
    labels = np.arange(n) % k
    noise = rng.generator(seed, "data").normal(0.0, sd, size=(n, center_array.shape[1]))
    inputs = center_array[labels] + noise
    return _classification(inputs, labels, seed, test_fraction)


def load_csv(
    path: str | Path, seed: int = 0, test_fraction: float = DEFAULT_TEST_FRACTION
) -> Dataset:
    """Read a comma-separated UTF-8 file with a header; the last column is the label.

    Integer labels make a classification dataset; any other numeric labels a
    regression dataset. Rows and columns in error messages are 1-based, data
    rows counted after the header.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"CSV file not found: {path}", exit_code=4)
    try:
        frame = pd.read_csv(
            path, sep=",", decimal=".", dtype=str, keep_default_na=False, encoding="utf-8"
        )
    except pd.errors.EmptyDataError as exc:
        raise DataError(f"CSV file is empty: {path}") from exc
    except (pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise DataError(f"Cannot parse CSV file {path}: {exc}") from exc
    if frame.empty:
        raise DataError(f"CSV file has a header but no data rows: {path}")
    if frame.shape[1] < 2:
        raise DataError(f"CSV file needs at least one feature column and a label: {path}")

    numeric = frame.apply(pd.to_numeric, errors="coerce")
    bad = numeric.isna().to_numpy()
    if bad.any():
        row, column = (int(i) for i in np.argwhere(bad)[0])
        raise DataError(
            f"Non-numeric value {frame.iat[row, column]!r} in {path}",
            row=row + 1,
            column=column + 1,
        )
    values = numeric.to_numpy(dtype=np.float64)
    inputs, labels = values[:, :-1], values[:, -1]
    logger.debug("Loaded %d rows x %d features from %s", *inputs.shape, path)

    if np.all(labels == np.round(labels)) and labels.min() >= 0:
        return _classification(inputs, labels, seed, test_fraction)
    train, test = _split_indices(inputs.shape[0], test_fraction, seed)
    return Dataset(
        inputs=inputs,
        targets=labels.reshape(-1, 1),
        train_indices=train,
        test_indices=test,
        seed=seed,
    )


def batches(d: Dataset, batch_size: int, epoch_seed: int) -> Iterator[Batch]:
    """Yield one epoch of the training split in a seeded shuffled order.

    The last, possibly smaller, batch is kept.
    """
    if batch_size < 1:
        raise ValueError(f"batch_size must be positive, got {batch_size}")
    order = rng.generator(d.seed, "batches", epoch_seed).permutation(d.train_indices)
    for start in range(0, order.size, batch_size):
        rows = order[start : start + batch_size]
        yield Batch(d.inputs[rows], d.targets[rows])
