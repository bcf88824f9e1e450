"""Tests for dataset generators, CSV loading and mini-batching."""

from pathlib import Path

import numpy as np
import pytest

from swaflat.datasets import batches, gaussian_blobs, load_csv, two_moons
from swaflat.errors import DataError


class TestTwoMoons:
    """Tests for the two moons generator."""

    def test_noise_free_points_lie_on_arcs(self) -> None:
        """Test noise-free points lie on the two unit half circles."""
        d = two_moons(4, 0.0, 0, test_fraction=0.0)
        upper = d.inputs[d.targets == 0]
        lower = d.inputs[d.targets == 1]
        np.testing.assert_allclose(np.hypot(upper[:, 0], upper[:, 1]), 1.0, atol=1e-15)
        np.testing.assert_allclose(np.hypot(lower[:, 0] - 1.0, lower[:, 1] - 0.5), 1.0, atol=1e-15)

    def test_deterministic(self) -> None:
        """Test the same seed gives the same points and split."""
        a = two_moons(200, 0.2, 5)
        b = two_moons(200, 0.2, 5)
        assert np.array_equal(a.inputs, b.inputs)
        assert np.array_equal(a.train_indices, b.train_indices)

    def test_seed_changes_noise(self) -> None:
        """Test different seeds give different noise."""
        assert not np.array_equal(two_moons(50, 0.2, 1).inputs, two_moons(50, 0.2, 2).inputs)

    def test_balanced_classes(self) -> None:
        """Test both moons get half the points."""
        assert two_moons(1000, 0.2, 7).class_counts() == [500, 500]

    def test_split_sizes(self) -> None:
        """Test the default split holds out a fifth."""
        d = two_moons(100, 0.1, 0)
        assert d.train_indices.size == 80
        assert d.test_indices.size == 20
        assert d.num_classes == 2

    @pytest.mark.parametrize(("n", "noise"), [(1, 0.1), (10, -0.1)])
    def test_invalid_arguments(self, n: int, noise: float) -> None:
        """Test too few points or negative noise."""
        with pytest.raises(DataError):
            two_moons(n, noise, 0)

    def test_arrays_are_read_only(self) -> None:
        """Test dataset arrays cannot be modified."""
        d = two_moons(10, 0.1, 0)
        with pytest.raises(ValueError, match="read-only"):
            d.inputs[0, 0] = 1.0


class TestGaussianBlobs:
    """Tests for the Gaussian blobs generator."""

    def test_class_sizes_differ_by_at_most_one(self) -> None:
        """Test points are spread evenly over the centers."""
        d = gaussian_blobs(100, [[0, 0], [5, 5], [-5, 5]], 0.5, 0)
        counts = d.class_counts()
        assert sum(counts) == 100
        assert max(counts) - min(counts) <= 1

    def test_points_near_centers(self) -> None:
        """Test tight blobs stay on their side."""
        d = gaussian_blobs(300, [[-10, 0], [10, 0]], 0.1, 3)
        assert (d.inputs[d.targets == 0][:, 0] < 0).all()
        assert (d.inputs[d.targets == 1][:, 0] > 0).all()

    def test_empty_centers(self) -> None:
        """Test blobs without centers."""
        with pytest.raises(DataError, match="centers"):
            gaussian_blobs(10, [], 0.5, 0)


class TestLoadCsv:
    """Tests for CSV ingestion."""

    def test_three_rows_two_classes(self, tmp_path: Path) -> None:
        """Test integer labels make a classification dataset."""
        path = tmp_path / "data.csv"
        path.write_text("x1,x2,label\n0.5,1.0,0\n1.5,-2.0,1\n0.0,0.0,0\n")
        d = load_csv(path)
        assert d.size == 3
        assert d.num_classes == 2
        assert d.inputs.shape == (3, 2)

    def test_regression_labels(self, tmp_path: Path) -> None:
        """Test fractional labels make a regression dataset."""
        path = tmp_path / "data.csv"
        path.write_text("x,y\n1,0.5\n2,1.5\n3,-0.25\n")
        d = load_csv(path, test_fraction=0.0)
        assert not d.is_classification
        assert d.targets.shape == (3, 1)

    def test_header_only(self, tmp_path: Path) -> None:
        """Test a CSV with no data rows."""
        path = tmp_path / "data.csv"
        path.write_text("x1,x2,label\n")
        with pytest.raises(DataError, match="no data rows"):
            load_csv(path)

    def test_non_numeric_cell_location(self, tmp_path: Path) -> None:
        """Row and column are 1-based, rows counted after the header."""
        path = tmp_path / "data.csv"
        path.write_text("x1,x2,label\n1,2,0\n3,4,abc\n5,6,1\n")
        with pytest.raises(DataError, match=r"row 2, column 3") as info:
            load_csv(path)
        assert (info.value.row, info.value.column) == (2, 3)

    def test_missing_file_is_io_error(self, tmp_path: Path) -> None:
        """Test a missing CSV is an I/O failure."""
        with pytest.raises(DataError) as info:
            load_csv(tmp_path / "missing.csv")
        assert info.value.exit_code == 4

    def test_single_column(self, tmp_path: Path) -> None:
        """Test a CSV without feature columns."""
        path = tmp_path / "data.csv"
        path.write_text("label\n0\n1\n")
        with pytest.raises(DataError, match="feature column"):
            load_csv(path)


class TestBatches:
    """Tests for seeded mini-batching."""

    def test_epoch_covers_train_split_once(self) -> None:
        """Test one epoch yields every training row exactly once."""
        d = two_moons(103, 0.1, 0)
        rows = np.concatenate([b.inputs for b in batches(d, 16, 0)])
        assert rows.shape[0] == d.train_indices.size
        expected = d.inputs[d.train_indices]
        assert sorted(map(tuple, rows.tolist())) == sorted(map(tuple, expected.tolist()))

    def test_last_partial_batch_kept(self) -> None:
        """Test the final short batch is not dropped."""
        d = two_moons(103, 0.1, 0)
        sizes = [b.size for b in batches(d, 16, 0)]
        assert sizes[-1] == d.train_indices.size % 16 or sizes[-1] == 16
        assert sum(sizes) == d.train_indices.size

    def test_epoch_seed_changes_order(self) -> None:
        """Test the shuffle depends only on the epoch seed."""
        d = two_moons(100, 0.1, 0)
        first = next(iter(batches(d, 10, 0))).inputs
        assert np.array_equal(first, next(iter(batches(d, 10, 0))).inputs)
        assert not np.array_equal(first, next(iter(batches(d, 10, 1))).inputs)

    def test_invalid_batch_size(self) -> None:
        """Test a zero batch size."""
        with pytest.raises(ValueError, match="batch_size"):
            next(iter(batches(two_moons(10, 0.1, 0), 0, 0)))
