"""Base optimizers: plain SGD, SGD with momentum and AdamW.

All kinds apply decoupled weight decay ``w <- w - eta * weight_decay * w``
to the pre-step weights, separately from the gradient update.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from swaflat.errors import NumericError
from swaflat.params import FloatArray, ParamVector, _require_same_layout, norm2

OptimizerKind = Literal["sgd", "sgd-momentum", "adamw"]
OPTIMIZER_KINDS: tuple[str, ...] = ("sgd", "sgd-momentum", "adamw")

# AdamW defaults: beta1, beta2, eps and weight decay.
ADAMW_DEFAULTS = {"beta1": 0.9, "beta2": 0.999, "eps": 1e-8, "weight_decay": 0.01}


@dataclass(frozen=True)
class Hyperparameters:
    momentum: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    clip_norm: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError(f"momentum must lie in [0, 1), got {self.momentum}")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("beta1 and beta2 must lie in [0, 1)")
        if self.eps <= 0 or self.weight_decay < 0 or self.clip_norm < 0:
            raise ValueError("eps must be positive; weight_decay and clip_norm non-negative")


@dataclass(frozen=True, eq=False)
class OptimizerState:
    """Optimizer kind, hyperparameters, step counter and moment buffers."""

    kind: OptimizerKind
    hyper: Hyperparameters = field(default_factory=Hyperparameters)
    step: int = 0
    # velocity for sgd-momentum; first and second moments for adamw
    buffers: tuple[FloatArray, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in OPTIMIZER_KINDS:
            raise ValueError(f"Unknown optimizer kind: {self.kind}")

    @classmethod
    def create(cls, kind: OptimizerKind, **hyper: float) -> OptimizerState:
        """New state; AdamW picks up its default settings unless overridden."""
        params = dict(ADAMW_DEFAULTS) if kind == "adamw" else {}
        params.update(hyper)
        return cls(kind, Hyperparameters(**params))


def clip_gradient(g: ParamVector, max_norm: float) -> ParamVector:
    """Rescale ``g`` to global norm ``max_norm`` when it is larger."""
    total = norm2(g)
    if max_norm <= 0 or total <= max_norm:
        return g
    return g.with_values(g.values * (max_norm / total))


def step(
    opt: OptimizerState, w: ParamVector, g: ParamVector, eta: float
) -> tuple[OptimizerState, ParamVector]:
    """Apply one update; returns the advanced state and the new weights."""
    _require_same_layout(w, g)
    if eta < 0:
        raise ValueError(f"Learning rate must be non-negative, got {eta}")
    if not np.isfinite(g.values).all():
        raise NumericError("non-finite gradient", location=f"optimizer step {opt.step + 1}")
    hp = opt.hyper
    if hp.clip_norm > 0:
        g = clip_gradient(g, hp.clip_norm)

    t = opt.step + 1
    x = w.values
    grad = g.values
    if opt.kind == "sgd":
        update = grad
        buffers: tuple[FloatArray, ...] = ()
    elif opt.kind == "sgd-momentum":
        velocity = opt.buffers[0] if opt.buffers else np.zeros_like(x)
        velocity = hp.momentum * velocity + grad
        update = velocity
        buffers = (velocity,)
    else:
        m, v = opt.buffers if opt.buffers else (np.zeros_like(x), np.zeros_like(x))
        m = hp.beta1 * m + (1 - hp.beta1) * grad
        v = hp.beta2 * v + (1 - hp.beta2) * grad * grad
        m_hat = m / (1 - hp.beta1**t)
        v_hat = v / (1 - hp.beta2**t)
        update = m_hat / (np.sqrt(v_hat) + hp.eps)
        buffers = (m, v)

    if hp.weight_decay:
        new = x - eta * hp.weight_decay * x - eta * update
    else:
        new = x - eta * update
    if not np.isfinite(new).all():
        raise NumericError("non-finite weights after update", location=f"optimizer step {t}")
    return replace(opt, step=t, buffers=buffers), w.with_values(new)
