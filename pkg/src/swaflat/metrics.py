"""Per-step and per-evaluation training records, plus loop timing."""

from __future__ import annotations

import time
from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from typing import Any


@dataclass(frozen=True)
class StepRecord:
    step: int
    phase: str
    lr: float
    train_loss: float


@dataclass(frozen=True)
class EvalRecord:
    step: int
    weights: str  # "iterate" or "swa"
    split: str
    loss: float
    accuracy: float | None = None
    rmse: float | None = None


@dataclass
class MetricsLog:
    """Training history: one record per optimizer step and per evaluation."""

    steps: list[StepRecord] = field(default_factory=list)
    evals: list[EvalRecord] = field(default_factory=list)

    def record_step(self, step: int, phase: str, lr: float, train_loss: float) -> None:
        if self.steps and step <= self.steps[-1].step:
            raise ValueError(f"Steps must increase: {step} after {self.steps[-1].step}")
        self.steps.append(StepRecord(step, phase, lr, train_loss))

    def record_eval(self, step: int, weights: str, split: str, metrics: dict[str, float]) -> None:
        self.evals.append(
            EvalRecord(
                step,
                weights,
                split,
                metrics["loss"],
                accuracy=metrics.get("accuracy"),
                rmse=metrics.get("rmse"),
            )
        )

    def train_losses(self) -> list[float]:
        return [record.train_loss for record in self.steps]

    def to_dict(self) -> dict[str, Any]:
        return {
            "steps": [asdict(record) for record in self.steps],
            "evals": [asdict(record) for record in self.evals],
        }


class Stopwatch:
    """Monotonic wall-clock accumulator with named phases and pausable sections."""

    def __init__(self) -> None:
        self.phases: dict[str, float] = {}
        self._phase: str | None = None
        self._started = 0.0

    def start(self, phase: str) -> None:
        self.stop()
        self._phase = phase
        self._started = time.perf_counter()

    def stop(self) -> None:
        if self._phase is not None:
            elapsed = time.perf_counter() - self._started
            self.phases[self._phase] = self.phases.get(self._phase, 0.0) + elapsed
            self._phase = None

    @contextmanager
    def paused(self) -> Iterator[None]:
        """Exclude the enclosed block (evaluation, I/O) from the current phase."""
        phase = self._phase
        self.stop()
        try:
            yield
        finally:
            if phase is not None:
                self.start(phase)
