"""Mini-batch training loop shared by plain fine-tuning and SWA runs."""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterator
from dataclasses import dataclass, field

from swaflat.datasets import Dataset, batches
from swaflat.metrics import MetricsLog, Stopwatch
from swaflat.models import Batch, ModelSpec
from swaflat.optimizers import OptimizerState, step
from swaflat.params import ParamVector, check_finite
from swaflat.schedules import Schedule, lr_at

logger = logging.getLogger(__name__)

StepHook = Callable[[int, ParamVector], None]


def batch_stream(data: Dataset, batch_size: int) -> Iterator[Batch]:
    """Endless mini-batches; epoch ``e`` is shuffled with epoch seed ``e``."""
    epoch = 0
    while True:
        yield from batches(data, batch_size, epoch)
        epoch += 1


def evaluate_splits(model: ModelSpec, w: ParamVector, data: Dataset) -> dict[str, dict[str, float]]:
    """Metrics of ``w`` on every non-empty split of ``data``."""
    results = {"train": model.evaluate(w, data.train_batch())}
    if data.test_indices.size:
        results["test"] = model.evaluate(w, data.test_batch())
    return results


@dataclass
class TrainResult:
    initial: ParamVector
    final: ParamVector
    metrics: MetricsLog
    timings: dict[str, float]
    final_eval: dict[str, dict[str, float]] = field(default_factory=dict)


class Trainer:
    """Owns the weights, optimizer state and batch stream of one run.

    ``run`` advances the global step counter, so successive phases share one
    continuous batch sequence and one metrics log.
    """

    def __init__(
        self,
        model: ModelSpec,
        data: Dataset,
        opt: OptimizerState,
        w: ParamVector,
        *,
        batch_size: int,
        eval_every: int = 0,
    ) -> None:
        self.model = model
        self.data = data
        self.opt = opt
        self.w = check_finite(w, "initial weights")
        self.eval_every = eval_every
        self.global_step = 0
        self.metrics = MetricsLog()
        self.stopwatch = Stopwatch()
        self._batches = batch_stream(data, batch_size)
        self.extra_eval: dict[str, Callable[[], ParamVector]] = {}

    def evaluate(self) -> None:
        """Record split metrics for the iterate and any extra weight sets."""
        with self.stopwatch.paused():
            targets = {"iterate": lambda: self.w, **self.extra_eval}
            for weights, get in targets.items():
                for split, values in evaluate_splits(self.model, get(), self.data).items():
                    self.metrics.record_eval(self.global_step, weights, split, values)

    def run(
        self, schedule: Schedule, n_steps: int, phase: str, after_step: StepHook | None = None
    ) -> ParamVector:
        """Run ``n_steps`` updates; the schedule is indexed 1..n_steps within this phase."""
        logger.info(
            "Phase %s: steps %d-%d with %s",
            phase,
            self.global_step + 1,
            self.global_step + n_steps,
            schedule.describe(),
        )
        self.stopwatch.start(phase)
        for i in range(1, n_steps + 1):
            self.global_step += 1
            batch = next(self._batches)
            value, gradient = self.model.value_and_grad(self.w, batch)
            assert gradient is not None
            eta = lr_at(schedule, i)
            self.opt, self.w = step(self.opt, self.w, gradient, eta)
            self.metrics.record_step(self.global_step, phase, eta, value)
            if after_step is not None:
                after_step(i, self.w)
            if self.eval_every and self.global_step % self.eval_every == 0:
                self.evaluate()
        self.stopwatch.stop()
        return self.w


def train(
    model: ModelSpec,
    data: Dataset,
    opt: OptimizerState,
    schedule: Schedule,
    total_steps: int,
    seed: int,
    *,
    batch_size: int = 32,
    eval_every: int = 0,
    w0: ParamVector | None = None,
) -> TrainResult:
    """Plain fine-tuning: ``total_steps`` updates following ``schedule``."""
    if total_steps < 1:
        raise ValueError(f"total_steps must be positive, got {total_steps}")
    initial = w0 if w0 is not None else model.init_weights(seed)
    trainer = Trainer(model, data, opt, initial, batch_size=batch_size, eval_every=eval_every)
    final = trainer.run(schedule, total_steps, "train")
    final_eval = evaluate_splits(model, final, data)
    for split, values in final_eval.items():
        logger.info("Final iterate %s: %s", split, _fmt(values))
    return TrainResult(initial, final, trainer.metrics, dict(trainer.stopwatch.phases), final_eval)


def _fmt(values: dict[str, float]) -> str:
    return ", ".join(f"{key}={value:.4f}" for key, value in values.items())
