"""Learning-rate schedules indexed by 1-based optimizer step."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

from swaflat.errors import ScheduleRangeError

ScheduleKind = Literal["constant", "high-constant", "cyclical", "linear-decay"]
SCHEDULE_KINDS: tuple[str, ...] = ("constant", "high-constant", "cyclical", "linear-decay")


@dataclass(frozen=True)
class Schedule:
    """Learning rate as a function of the step index ``i`` in ``1..total_steps``.

    ``cyclical`` restarts every ``cycle_len`` steps and anneals linearly
    within each cycle::

        t_i = ((i - 1) mod K) + 1
        eta_i = (1 - t_i / K) * eta_max + (t_i / K) * eta_min

    ``high-constant`` is the cyclical form with ``eta_min == eta_max``.
    """

    kind: ScheduleKind
    eta_max: float
    total_steps: int
    eta_min: float = 0.0
    cycle_len: int = 1

    def __post_init__(self) -> None:
        if self.kind not in SCHEDULE_KINDS:
            raise ValueError(f"Unknown schedule kind: {self.kind}")
        if self.eta_max < 0 or self.eta_min < 0:
            raise ValueError("Learning rates must be non-negative")
        if self.total_steps < 1:
            raise ValueError(f"total_steps must be positive, got {self.total_steps}")
        if self.kind == "high-constant" and self.eta_min != self.eta_max:
            object.__setattr__(self, "eta_min", self.eta_max)
        if self.kind == "cyclical":
            if self.eta_max < self.eta_min:
                raise ValueError(
                    "Cyclical schedules need eta_max >= eta_min, "
                    f"got {self.eta_max} < {self.eta_min}"
                )
            if not 1 <= self.cycle_len <= self.total_steps:
                raise ValueError(
                    f"cycle_len must lie in [1, {self.total_steps}], got {self.cycle_len}"
                )

    @classmethod
    def constant(cls, eta: float, total_steps: int) -> Schedule:
        return cls("constant", eta, total_steps, eta_min=eta)

    @classmethod
    def high_constant(cls, eta: float, total_steps: int) -> Schedule:
        return cls("high-constant", eta, total_steps, eta_min=eta)

    @classmethod
    def cyclical(cls, eta_max: float, eta_min: float, cycle_len: int, total_steps: int) -> Schedule:
        return cls("cyclical", eta_max, total_steps, eta_min=eta_min, cycle_len=cycle_len)

    @classmethod
    def linear_decay(cls, eta_max: float, total_steps: int) -> Schedule:
        return cls("linear-decay", eta_max, total_steps)

    def __call__(self, i: int) -> float:
        return lr_at(self, i)

    def describe(self) -> str:
        if self.kind == "cyclical":
            return f"cyclical({self.eta_max:g}->{self.eta_min:g}, K={self.cycle_len})"
        return f"{self.kind}({self.eta_max:g})"


def lr_at(s: Schedule, i: int) -> float:
    """Learning rate of schedule ``s`` at step ``i``.

    Examples:
        >>> lr_at(Schedule.cyclical(2e-5, 1e-6, 10, 100), 10)
        1e-06
        >>> lr_at(Schedule.high_constant(3e-6, 100), 57)
        3e-06
    """
    if not 1 <= i <= s.total_steps:
        raise ScheduleRangeError(f"Step {i} is outside the schedule range 1..{s.total_steps}")
    if s.kind == "cyclical":
        t = (i - 1) % s.cycle_len + 1
        frac = t / s.cycle_len
        return (1 - frac) * s.eta_max + frac * s.eta_min
    if s.kind == "linear-decay":
        return s.eta_max * (1 - (i - 1) / s.total_steps)
    return s.eta_max
