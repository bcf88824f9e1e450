"""Tests for parameter vectors and their arithmetic."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swaflat.errors import LayoutError, NumericError
from swaflat.params import (
    Group,
    GroupMask,
    ParamVector,
    axpy,
    copy,
    dot,
    masked_view,
    mean_of,
    norm2,
    running_mean_update,
    scale,
    scatter_masked,
)


def vec(*values: float) -> ParamVector:
    return ParamVector(list(values))


EMB_HEAD = ParamVector.from_groups({"emb": [1.0, 2.0], "head": [3.0]})


class TestParamVector:
    """Tests for construction and layout checks."""

    def test_default_single_group(self) -> None:
        """A vector without groups gets one group covering everything."""
        x = vec(1, 2, 3)
        assert x.group_names == ("w",)
        assert len(x) == 3

    def test_from_groups_offsets(self) -> None:
        """Groups are laid out contiguously in mapping order."""
        assert EMB_HEAD.groups == (Group("emb", 0, 2), Group("head", 2, 1))
        assert EMB_HEAD.group("head").tolist() == [3.0]

    def test_gap_in_layout_rejected(self) -> None:
        """Groups must cover the vector exactly."""
        with pytest.raises(LayoutError):
            ParamVector([1.0, 2.0, 3.0], [Group("a", 0, 1), Group("b", 2, 1)])

    def test_short_layout_rejected(self) -> None:
        """Test groups that do not cover every value."""
        with pytest.raises(LayoutError, match="cover 2 values"):
            ParamVector([1.0, 2.0, 3.0], [Group("a", 0, 2)])

    def test_duplicate_group_rejected(self) -> None:
        """Test two groups with one name."""
        with pytest.raises(LayoutError, match="Duplicate"):
            ParamVector([1.0, 2.0], [Group("a", 0, 1), Group("a", 1, 1)])

    def test_unknown_group(self) -> None:
        """Test looking up a group that does not exist."""
        with pytest.raises(LayoutError, match="Unknown parameter group"):
            EMB_HEAD.group("body")

    def test_values_are_read_only(self) -> None:
        """Vectors cannot be mutated in place."""
        x = vec(1, 2)
        with pytest.raises(ValueError, match="read-only"):
            x.values[0] = 5.0

    def test_source_array_is_copied(self) -> None:
        """Test later changes to the source array do not leak in."""
        source = np.array([1.0, 2.0])
        x = ParamVector(source)
        source[0] = 9.0
        assert x.values.tolist() == [1.0, 2.0]

    def test_equality_needs_same_layout(self) -> None:
        """Test equal values under different names are not equal."""
        a = ParamVector.from_groups({"a": [1.0], "b": [2.0]})
        b = ParamVector.from_groups({"c": [1.0], "d": [2.0]})
        assert a != b
        assert a == copy(a)


class TestArithmetic:
    """Tests for axpy, dot, scale and norms."""

    @pytest.mark.parametrize(
        ("alpha", "x", "y", "expected"),
        [
            (0.0, [5, 5], [1, 2], [1, 2]),
            (1.0, [0, 0], [3, 4], [3, 4]),
            (2.0, [1, 1], [1, 1], [3, 3]),
        ],
    )
    def test_axpy(self, alpha: float, x: list, y: list, expected: list) -> None:
        """axpy returns alpha * x + y."""
        assert axpy(alpha, vec(*x), vec(*y)).values.tolist() == expected

    @pytest.mark.parametrize(
        ("x", "y", "expected"),
        [([1, 0], [0, 1], 0.0), ([1, 2], [1, 2], 5.0), ([3], [1], 3.0)],
    )
    def test_dot(self, x: list, y: list, expected: float) -> None:
        """Test dot products of small vectors."""
        assert dot(vec(*x), vec(*y)) == expected

    def test_layout_mismatch(self) -> None:
        """Arithmetic on differently laid out vectors fails."""
        with pytest.raises(LayoutError):
            axpy(1.0, vec(1, 2), vec(1, 2, 3))
        with pytest.raises(LayoutError):
            dot(EMB_HEAD, vec(1, 2, 3))

    def test_scale_and_norm(self) -> None:
        """Test scaling and the Euclidean norm."""
        assert scale(2.0, vec(3, 4)).values.tolist() == [6.0, 8.0]
        assert norm2(vec(3, 4)) == 5.0

    def test_overflow_is_numeric_error(self) -> None:
        """Test overflow to infinity raises NumericError."""
        with pytest.raises(NumericError):
            scale(1e308, vec(1e308))

    def test_dot_sums_in_index_order(self) -> None:
        """Terms are added left to right, so the position of a small term matters."""
        ones = vec(1, 1, 1)
        assert dot(vec(1e16, 1.0, -1e16), ones) == 0.0
        assert dot(vec(1e16, -1e16, 1.0), ones) == 1.0

    @given(st.lists(st.floats(min_value=-1e3, max_value=1e3), min_size=0, max_size=200))
    @settings(max_examples=100)
    def test_dot_matches_sequential_loop(self, values: list[float]) -> None:
        """dot is bitwise equal to a plain left-to-right accumulation."""
        x = ParamVector(values)
        y = ParamVector(values[::-1])
        total = 0.0
        for a, b in zip(values, values[::-1], strict=True):
            total += a * b
        assert dot(x, y) == total

    @given(st.lists(st.floats(min_value=-10, max_value=10), min_size=1, max_size=50))
    @settings(max_examples=100)
    def test_dot_matches_norm_squared(self, values: list[float]) -> None:
        """dot(x, x) equals norm2(x) squared within 1e-12 relative."""
        x = ParamVector(values)
        assert dot(x, x) == pytest.approx(norm2(x) ** 2, rel=1e-12, abs=1e-300)


class TestMasks:
    """Tests for group masks, masked views and scatter-back."""

    def test_single_group_selection(self) -> None:
        """Test a mask of the last group."""
        assert masked_view(EMB_HEAD, GroupMask.of(["head"])).values.tolist() == [3.0]

    def test_all_groups_identity(self) -> None:
        """Test a mask of every group returns the vector."""
        assert masked_view(EMB_HEAD, GroupMask.all(EMB_HEAD)) == EMB_HEAD

    def test_first_group_selection(self) -> None:
        """Test a mask of the first group."""
        assert masked_view(EMB_HEAD, GroupMask.of(["emb"])).values.tolist() == [1.0, 2.0]

    def test_unknown_group_in_mask(self) -> None:
        """Test masks naming a missing group."""
        with pytest.raises(LayoutError):
            masked_view(EMB_HEAD, GroupMask.of(["body"]))
        with pytest.raises(LayoutError):
            GroupMask.excluding(EMB_HEAD, ["body"])

    def test_excluding(self) -> None:
        """Test excluding a group keeps the rest."""
        mask = GroupMask.excluding(EMB_HEAD, ["emb"])
        assert mask.included == frozenset({"head"})
        assert mask.indicator(EMB_HEAD).tolist() == [0.0, 0.0, 1.0]

    def test_scatter_back(self) -> None:
        """Scatter writes included groups and leaves excluded ones untouched."""
        mask = GroupMask.of(["head"])
        sub = masked_view(EMB_HEAD, mask).with_values([7.0])
        assert scatter_masked(EMB_HEAD, mask, sub).values.tolist() == [1.0, 2.0, 7.0]

    def test_scatter_rejects_foreign_layout(self) -> None:
        """Test scattering a sub-vector of another layout."""
        with pytest.raises(LayoutError):
            scatter_masked(EMB_HEAD, GroupMask.of(["head"]), vec(1.0))

    @given(
        st.lists(st.floats(min_value=-1e6, max_value=1e6), min_size=3, max_size=3),
        st.sets(st.sampled_from(["emb", "head"])),
    )
    def test_view_then_scatter_is_identity(self, values: list[float], names: set[str]) -> None:
        """Test scattering a masked view back changes nothing."""
        x = EMB_HEAD.with_values(values)
        mask = GroupMask.of(names)
        assert scatter_masked(x, mask, masked_view(x, mask)) == x


class TestMeans:
    """Tests for the running mean and the exact batch mean."""

    def test_running_mean_update(self) -> None:
        """Test the running mean after one and two updates."""
        assert running_mean_update(vec(0), 1, vec(2)).values.tolist() == [1.0]
        assert running_mean_update(vec(1), 2, vec(4)).values.tolist() == [2.0]

    def test_running_mean_needs_a_component(self) -> None:
        """Test updating a mean over zero components."""
        with pytest.raises(ValueError, match="at least one component"):
            running_mean_update(vec(0), 0, vec(2))

    def test_mean_of(self) -> None:
        """Test the mean of two vectors."""
        assert mean_of([vec(1, 3), vec(3, 1)]).values.tolist() == [2.0, 2.0]

    def test_mean_of_empty(self) -> None:
        """Test the mean of nothing."""
        with pytest.raises(ValueError, match="empty"):
            mean_of([])

    def test_mean_of_is_order_independent(self) -> None:
        """Test the mean does not depend on input order."""
        gen = np.random.default_rng(3)
        vectors = [ParamVector(gen.normal(size=20) * 10.0 ** gen.integers(-5, 5)) for _ in range(9)]
        assert mean_of(vectors) == mean_of(list(reversed(vectors)))

    @given(
        st.integers(min_value=1, max_value=40),
        st.integers(min_value=1, max_value=60),
        st.integers(min_value=0, max_value=2**32 - 1),
    )
    @settings(max_examples=50, deadline=None)
    def test_online_mean_matches_batch_mean(self, size: int, count: int, seed: int) -> None:
        """Folding vectors in one at a time gives their arithmetic mean."""
        gen = np.random.default_rng(seed)
        vectors = [ParamVector(gen.uniform(-10, 10, size=size)) for _ in range(count)]
        online = vectors[0]
        for n, vector in enumerate(vectors[1:], start=1):
            online = running_mean_update(online, n, vector)
        batch = mean_of(vectors)
        np.testing.assert_allclose(online.values, batch.values, rtol=1e-10, atol=1e-12)
