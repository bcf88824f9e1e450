"""Flat parameter vectors with named group segments.

A ``ParamVector`` is a float64 array split into contiguous, named groups
(``layer0.weight``, ``layer0.bias``, ...). Vectors are read-only once built;
every operation returns a new vector with the same layout.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from swaflat.errors import LayoutError, NumericError

FloatArray = NDArray[np.float64]


@dataclass(frozen=True)
class Group:
    """A named contiguous segment of a parameter vector."""

    name: str
    offset: int
    length: int

    @property
    def stop(self) -> int:
        return self.offset + self.length


Layout = tuple[Group, ...]


def _check_layout(groups: Layout, size: int) -> None:
    position = 0
    seen: set[str] = set()
    for group in groups:
        if group.name in seen:
            raise LayoutError(f"Duplicate group name: {group.name}")
        if group.offset != position or group.length < 0:
            raise LayoutError(
                f"Group {group.name} at offset {group.offset} (length {group.length}) "
                f"does not continue the layout at {position}"
            )
        seen.add(group.name)
        position = group.stop
    if position != size:
        raise LayoutError(f"Groups cover {position} values but the vector has {size}")


class ParamVector:
    """Immutable float64 parameter vector with a named group layout."""

    __slots__ = ("_values", "_groups")

    def __init__(self, values: ArrayLike, groups: Iterable[Group] | None = None) -> None:
        array = np.array(values, dtype=np.float64, copy=True).reshape(-1)
        layout: Layout = (
            tuple(groups) if groups is not None else (Group("w", 0, int(array.size)),)
        )
        _check_layout(layout, int(array.size))
        array.flags.writeable = False
        self._values = array
        self._groups = layout

    @classmethod
    def from_groups(cls, parts: Mapping[str, ArrayLike]) -> ParamVector:
        """Build a vector by concatenating named arrays in mapping order."""
        groups = []
        chunks = []
        offset = 0
        for name, part in parts.items():
            chunk = np.asarray(part, dtype=np.float64).reshape(-1)
            groups.append(Group(name, offset, int(chunk.size)))
            chunks.append(chunk)
            offset += int(chunk.size)
        values = np.concatenate(chunks) if chunks else np.zeros(0)
        return cls(values, groups)

    @classmethod
    def _wrap(cls, values: FloatArray, groups: Layout) -> ParamVector:
        # Internal constructor for freshly computed arrays: no copy, no re-validation.
        vector = cls.__new__(cls)
        values.flags.writeable = False
        vector._values = values
        vector._groups = groups
        return vector

    @property
    def values(self) -> FloatArray:
        return self._values

    @property
    def groups(self) -> Layout:
        return self._groups

    @property
    def group_names(self) -> tuple[str, ...]:
        return tuple(group.name for group in self._groups)

    def group(self, name: str) -> FloatArray:
        """Return the (read-only) values of one named group."""
        for group in self._groups:
            if group.name == name:
                return self._values[group.offset : group.stop]
        raise LayoutError(f"Unknown parameter group: {name}")

    def with_values(self, values: ArrayLike) -> ParamVector:
        """Return a vector with this layout and new values."""
        array = np.array(values, dtype=np.float64, copy=True).reshape(-1)
        if array.size != self._values.size:
            raise LayoutError(f"Expected {self._values.size} values, got {array.size}")
        return ParamVector._wrap(array, self._groups)

    def same_layout(self, other: ParamVector) -> bool:
        return self._groups == other._groups

    def __len__(self) -> int:
        return int(self._values.size)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ParamVector):
            return NotImplemented
        return self.same_layout(other) and np.array_equal(self._values, other._values)

    def __hash__(self) -> int:
        return hash((self._groups, self._values.tobytes()))

    def __repr__(self) -> str:
        return f"ParamVector(size={len(self)}, groups={list(self.group_names)})"


@dataclass(frozen=True)
class GroupMask:
    """Named subset of parameter groups included in a computation."""

    included: frozenset[str]

    @classmethod
    def of(cls, names: Iterable[str]) -> GroupMask:
        return cls(frozenset(names))

    @classmethod
    def all(cls, x: ParamVector) -> GroupMask:
        return cls(frozenset(x.group_names))

    @classmethod
    def excluding(cls, x: ParamVector, names: Iterable[str]) -> GroupMask:
        excluded = set(names)
        unknown = excluded - set(x.group_names)
        if unknown:
            raise LayoutError(f"Unknown parameter group(s): {', '.join(sorted(unknown))}")
        return cls(frozenset(name for name in x.group_names if name not in excluded))

    def validate(self, x: ParamVector) -> None:
        unknown = self.included - set(x.group_names)
        if unknown:
            raise LayoutError(f"Unknown parameter group(s): {', '.join(sorted(unknown))}")

    def indicator(self, x: ParamVector) -> FloatArray:
        """Return a 0/1 array over ``x`` that is 1 on included groups."""
        self.validate(x)
        out = np.zeros(len(x))
        for group in x.groups:
            if group.name in self.included:
                out[group.offset : group.stop] = 1.0
        return out


def _require_same_layout(x: ParamVector, y: ParamVector) -> None:
    if not x.same_layout(y):
        raise LayoutError(
            f"Parameter layouts differ: {list(x.group_names)} ({len(x)}) "
            f"vs {list(y.group_names)} ({len(y)})"
        )


def check_finite(x: ParamVector, location: str) -> ParamVector:
    """Raise ``NumericError`` if ``x`` holds NaN or Inf."""
    if not np.isfinite(x.values).all():
        raise NumericError("non-finite parameter values", location=location)
    return x


def _finite(values: FloatArray, groups: Layout, location: str) -> ParamVector:
    if not np.isfinite(values).all():
        raise NumericError("non-finite result", location=location)
    return ParamVector._wrap(values, groups)


def axpy(alpha: float, x: ParamVector, y: ParamVector) -> ParamVector:
    """Return ``alpha * x + y``."""
    _require_same_layout(x, y)
    return _finite(alpha * x.values + y.values, x.groups, "axpy")


def scale(alpha: float, x: ParamVector) -> ParamVector:
    """Return ``alpha * x``."""
    return _finite(alpha * x.values, x.groups, "scale")


def copy(x: ParamVector) -> ParamVector:
    return ParamVector._wrap(x.values.copy(), x.groups)


def _sum_in_order(terms: FloatArray) -> float:
    """``((t0 + t1) + t2) + ...``; ``np.add.accumulate`` never reorders its operands."""
    if terms.size == 0:
        return 0.0
    return float(np.add.accumulate(terms)[-1])


def dot(x: ParamVector, y: ParamVector) -> float:
    """Inner product summed left to right in index order.

    Identical inputs give identical bits regardless of BLAS or vector width.
    """
    _require_same_layout(x, y)
    return _sum_in_order(x.values * y.values)


def norm2(x: ParamVector) -> float:
    """Euclidean norm, ``sqrt(dot(x, x))``."""
    return math.sqrt(_sum_in_order(x.values * x.values))


def running_mean_update(mean: ParamVector, count: int, x: ParamVector) -> ParamVector:
    """Absorb ``x`` into a mean of ``count`` components: ``(mean * count + x) / (count + 1)``."""
    _require_same_layout(mean, x)
    if count < 1:
        raise ValueError(f"A running mean needs at least one component, got {count}")
    return _finite((mean.values * count + x.values) / (count + 1), mean.groups, "running mean")


def masked_view(x: ParamVector, mask: GroupMask) -> ParamVector:
    """Concatenate the included groups of ``x``, preserving their order."""
    mask.validate(x)
    parts = {group.name: x.group(group.name) for group in x.groups if group.name in mask.included}
    return ParamVector.from_groups(parts)


def scatter_masked(x: ParamVector, mask: GroupMask, sub: ParamVector) -> ParamVector:
    """Write the groups of ``sub`` (a ``masked_view`` of ``x``) back into ``x``."""
    mask.validate(x)
    expected = tuple(name for name in x.group_names if name in mask.included)
    if sub.group_names != expected:
        raise LayoutError(
            f"Masked vector groups {list(sub.group_names)} do not match mask {list(expected)}"
        )
    values = x.values.copy()
    for group in x.groups:
        if group.name in mask.included:
            values[group.offset : group.stop] = sub.group(group.name)
    return ParamVector._wrap(values, x.groups)


def mean_of(vectors: Iterable[ParamVector]) -> ParamVector:
    """Exact arithmetic mean of vectors sharing one layout.

    Each coordinate is summed with ``math.fsum``; the result is therefore
    independent of the order of ``vectors``.
    """
    items = list(vectors)
    if not items:
        raise ValueError("Cannot average an empty collection of vectors")
    first = items[0]
    for other in items[1:]:
        _require_same_layout(first, other)
    stacked = np.stack([item.values for item in items], axis=1)
    sums = np.array([math.fsum(row) for row in stacked.tolist()], dtype=np.float64)
    return _finite(sums / len(items), first.groups, "mean")
