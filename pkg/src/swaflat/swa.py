"""Stochastic weight averaging.

Training runs in two stages. Stage 1 follows the pre-averaging schedule for
the first ``ceil(start_fraction * total_steps)`` steps. Stage 2 restarts the
step index at 1, follows the policy's schedule, and every ``interval`` steps
absorbs the current weights into a running mean::

    W_swa <- (W_swa * n + W) / (n + 1),   n = i / K

The weights at the start of stage 2 are the first averaged component, so at
the j-th collection the running mean already holds j components and
``n = i / K = j`` holds by construction.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

from swaflat.checkpoint import read_checkpoint
from swaflat.datasets import Dataset
from swaflat.errors import BudgetError, CheckpointError, LayoutError
from swaflat.models import ModelSpec
from swaflat.optimizers import OptimizerState
from swaflat.params import ParamVector, check_finite, mean_of, running_mean_update
from swaflat.schedules import Schedule
from swaflat.training import Trainer, TrainResult, evaluate_splits

logger = logging.getLogger(__name__)

DEFAULT_START_FRACTION = 0.5

ComponentHook = Callable[[int, int, ParamVector], None]


@dataclass(frozen=True)
class SwaPolicy:
    """When and how often to average, and the stage-2 learning-rate schedule."""

    interval: int
    schedule: Schedule
    start_fraction: float = DEFAULT_START_FRACTION

    def __post_init__(self) -> None:
        if self.interval < 1:
            raise ValueError(f"The averaging interval must be at least 1, got {self.interval}")
        if not 0.0 <= self.start_fraction < 1.0:
            raise ValueError(f"start_fraction must lie in [0, 1), got {self.start_fraction}")

    def stage1_steps(self, total_steps: int) -> int:
        return math.ceil(self.start_fraction * total_steps)

    def stage2_steps(self, total_steps: int) -> int:
        return total_steps - self.stage1_steps(total_steps)

    def check_budget(self, total_steps: int) -> None:
        stage2 = self.stage2_steps(total_steps)
        if stage2 < self.interval:
            raise BudgetError(
                f"Stage 2 has {stage2} steps, fewer than the averaging interval {self.interval}"
            )
        if self.schedule.total_steps < stage2:
            raise BudgetError(
                f"The stage-2 schedule covers {self.schedule.total_steps} steps, "
                f"stage 2 runs {stage2}"
            )


@dataclass(frozen=True)
class SwaState:
    """Running mean of the collected weights."""

    w_swa: ParamVector
    n_model: int
    interval: int
    steps_in_stage2: int = 0


def swa_init(w: ParamVector, interval: int = 1) -> SwaState:
    """Start averaging from ``w``, which counts as the first component."""
    check_finite(w, "stage-2 starting weights")
    return SwaState(w_swa=w, n_model=1, interval=interval)


def swa_observe(st: SwaState, w: ParamVector, i: int) -> SwaState:
    """Feed the weights after stage-2 step ``i``; absorbs them when ``i % K == 0``.

    ``steps_in_stage2`` records the stage-2 index of the latest collection.
    """
    if i < 1:
        raise ValueError(f"Stage-2 step indices start at 1, got {i}")
    if i % st.interval:
        return st
    if i // st.interval != st.n_model:
        raise ValueError(
            f"Stage-2 step {i} implies {i // st.interval} prior components, "
            f"the running mean holds {st.n_model}"
        )
    return SwaState(
        w_swa=running_mean_update(st.w_swa, st.n_model, w),
        n_model=st.n_model + 1,
        interval=st.interval,
        steps_in_stage2=i,
    )


@dataclass
class SwaResult(TrainResult):
    swa: ParamVector | None = None
    state: SwaState | None = None
    stage1_steps: int = 0
    collection_steps: list[int] = field(default_factory=list)
    swa_eval: dict[str, dict[str, float]] = field(default_factory=dict)


def swa_train(
    model: ModelSpec,
    data: Dataset,
    opt: OptimizerState,
    pre_schedule: Schedule,
    policy: SwaPolicy,
    total_steps: int,
    seed: int,
    *,
    batch_size: int = 32,
    eval_every: int = 0,
    w0: ParamVector | None = None,
    on_component: ComponentHook | None = None,
) -> SwaResult:
    """Two-stage training returning both the last iterate and the averaged weights.

    ``on_component(index, global_step, w)`` is called for the stage-2
    starting weights (index 0) and for every collected component; time spent
    in it is excluded from the loop timings.
    """
    policy.check_budget(total_steps)
    stage1 = policy.stage1_steps(total_steps)
    stage2 = total_steps - stage1
    initial = w0 if w0 is not None else model.init_weights(seed)
    trainer = Trainer(model, data, opt, initial, batch_size=batch_size, eval_every=eval_every)

    if stage1:
        trainer.run(pre_schedule, stage1, "stage1")

    state = swa_init(trainer.w, policy.interval)
    collection_steps: list[int] = []
    if on_component is not None:
        with trainer.stopwatch.paused():
            on_component(0, trainer.global_step, trainer.w)
    trainer.extra_eval["swa"] = lambda: state.w_swa

    def absorb(i: int, w: ParamVector) -> None:
        nonlocal state
        if i % policy.interval:
            return
        state = swa_observe(state, w, i)
        collection_steps.append(trainer.global_step)
        logger.debug("Collected component %d at step %d", state.n_model, trainer.global_step)
        if on_component is not None:
            with trainer.stopwatch.paused():
                on_component(state.n_model - 1, trainer.global_step, w)

    logger.info(
        "Averaging every %d steps from step %d (%d collections planned)",
        policy.interval,
        stage1 + 1,
        stage2 // policy.interval,
    )
    trainer.run(policy.schedule, stage2, "stage2", after_step=absorb)

    final_eval = evaluate_splits(model, trainer.w, data)
    swa_eval = evaluate_splits(model, state.w_swa, data)
    logger.info("SWA averaged %d components", state.n_model)
    return SwaResult(
        initial=initial,
        final=trainer.w,
        metrics=trainer.metrics,
        timings=dict(trainer.stopwatch.phases),
        final_eval=final_eval,
        swa=state.w_swa,
        state=state,
        stage1_steps=stage1,
        collection_steps=collection_steps,
        swa_eval=swa_eval,
    )


def soup_average(paths: Sequence[str | Path]) -> ParamVector:
    """Exact mean of the parameter vectors stored in checkpoint files."""
    if not paths:
        raise CheckpointError("soup_average needs at least one checkpoint")
    vectors = [read_checkpoint(path) for path in paths]
    first = vectors[0]
    for path, vector in zip(paths[1:], vectors[1:], strict=True):
        if not vector.same_layout(first):
            raise CheckpointError(
                f"{path}: layout {list(vector.group_names)} ({len(vector)} values) differs "
                f"from {paths[0]} ({len(first)} values)"
            )
    try:
        return mean_of(vectors)
    except LayoutError as exc:
        raise CheckpointError(str(exc)) from exc
