"""Curvature diagnostics: largest Hessian eigenvalue and Hessian trace.

Both estimators only touch the Hessian through Hessian-vector products,
computed as central differences of the analytic gradient. A ``GroupMask``
restricts the operator to the included parameter groups: excluded
coordinates of every direction are zeroed before and after each product.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Any

import numpy as np

from swaflat import rng
from swaflat.datasets import Dataset
from swaflat.errors import NumericError
from swaflat.models import Batch, DifferentiableModel
from swaflat.params import FloatArray, GroupMask, ParamVector, dot, norm2

logger = logging.getLogger(__name__)

DEFAULT_HVP_EPS = 1e-4
DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 500
DEFAULT_SAMPLES = 100

_TINY = 1e-300


def hvp(
    model: DifferentiableModel,
    w: ParamVector,
    b: Batch,
    v: ParamVector,
    eps0: float = DEFAULT_HVP_EPS,
) -> ParamVector:
    """Hessian-vector product ``(grad(w + e v) - grad(w - e v)) / 2e``, ``e = eps0 / ||v||``."""
    if eps0 <= 0:
        raise ValueError(f"eps0 must be positive, got {eps0}")
    length = norm2(v)
    if length == 0.0:
        raise NumericError("Hessian-vector product needs a non-zero direction", location="hvp")
    eps = eps0 / max(length, _TINY)
    plus = model.grad(w.with_values(w.values + eps * v.values), b)
    minus = model.grad(w.with_values(w.values - eps * v.values), b)
    product = (plus.values - minus.values) / (2.0 * eps)
    if not np.isfinite(product).all():
        raise NumericError("non-finite Hessian-vector product", location="hvp")
    return w.with_values(product)


class MaskedHessian:
    """The Hessian restricted to the groups of a mask, as a matrix-free operator."""

    def __init__(
        self,
        model: DifferentiableModel,
        w: ParamVector,
        b: Batch,
        mask: GroupMask,
        eps0: float = DEFAULT_HVP_EPS,
    ) -> None:
        self.model = model
        self.w = w
        self.b = b
        self.eps0 = eps0
        self.indicator = mask.indicator(w)
        self.dim = int(self.indicator.sum())
        if self.dim == 0:
            raise ValueError("The mask selects no parameters")

    def restrict(self, values: FloatArray) -> ParamVector:
        return self.w.with_values(values * self.indicator)

    def __call__(self, v: ParamVector) -> ParamVector:
        product = hvp(self.model, self.w, self.b, self.restrict(v.values), self.eps0)
        return self.restrict(product.values)


@dataclass(frozen=True)
class PowerIterationResult:
    eigenvalue: float
    iterations: int
    residual: float
    converged: bool


def lambda_max(
    model: DifferentiableModel,
    w: ParamVector,
    b: Batch,
    mask: GroupMask,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    seed: int = 0,
    eps0: float = DEFAULT_HVP_EPS,
) -> tuple[float, PowerIterationResult]:
    """Largest-magnitude Hessian eigenvalue (with its sign) by power iteration.

    Stops when successive Rayleigh quotients differ by less than
    ``tol * |estimate|`` or the eigen-residual ``||Hv - lambda v||`` drops
    below ``tol * |estimate|``. After ``max_iter`` iterations the best
    estimate is returned flagged as not converged.
    """
    operator = MaskedHessian(model, w, b, mask, eps0)
    start = rng.generator(seed, "power").standard_normal(len(w))
    v = operator.restrict(start)
    v = v.with_values(v.values / norm2(v))

    estimate = 0.0
    previous: float | None = None
    residual = math.inf
    for iteration in range(1, max_iter + 1):
        hv = operator(v)
        estimate = dot(v, hv)
        residual = norm2(hv.with_values(hv.values - estimate * v.values))
        threshold = tol * abs(estimate)
        settled = previous is not None and abs(estimate - previous) < threshold
        length = norm2(hv)
        if settled or residual <= threshold or length == 0.0:
            logger.debug("Power iteration converged after %d iterations", iteration)
            return estimate, PowerIterationResult(estimate, iteration, residual, True)
        previous = estimate
        v = hv.with_values(hv.values / length)

    logger.warning(
        "Power iteration did not converge in %d iterations (residual %.3g)", max_iter, residual
    )
    return estimate, PowerIterationResult(estimate, max_iter, residual, False)


def _rademacher_quadform(operator: MaskedHessian, seed: int, index: int) -> float:
    signs = rng.generator(seed, "hutchinson", index).integers(0, 2, size=len(operator.w))
    v = operator.restrict(2.0 * signs - 1.0)
    return dot(v, operator(v))


def trace_hutchinson(
    model: DifferentiableModel,
    w: ParamVector,
    b: Batch,
    mask: GroupMask,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    eps0: float = DEFAULT_HVP_EPS,
    workers: int = 1,
) -> tuple[float, float]:
    """Hutchinson trace estimate with Rademacher sample vectors and its standard error.

    Sample ``k`` draws from its own substream, and the mean is accumulated in
    sample order, so the result does not depend on ``workers``.
    """
    if samples < 1:
        raise ValueError(f"Hutchinson needs at least one sample, got {samples}")
    operator = MaskedHessian(model, w, b, mask, eps0)
    indices = range(samples)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(lambda k: _rademacher_quadform(operator, seed, k), indices))
    else:
        values = [_rademacher_quadform(operator, seed, k) for k in indices]
    mean = math.fsum(values) / samples
    if samples == 1:
        return mean, 0.0
    variance = math.fsum((value - mean) ** 2 for value in values) / (samples - 1)
    return mean, math.sqrt(variance / samples)


def hessian_matrix(
    model: DifferentiableModel,
    w: ParamVector,
    b: Batch,
    mask: GroupMask | None = None,
    eps0: float = DEFAULT_HVP_EPS,
    symmetrize: bool = True,
) -> FloatArray:
    """Dense Hessian of the included coordinates, one HVP column at a time."""
    mask = mask or GroupMask.all(w)
    operator = MaskedHessian(model, w, b, mask, eps0)
    included = np.flatnonzero(operator.indicator)
    columns = []
    for index in included:
        basis = np.zeros(len(w))
        basis[index] = 1.0
        columns.append(operator(w.with_values(basis)).values[included])
    matrix = np.column_stack(columns)
    return 0.5 * (matrix + matrix.T) if symmetrize else matrix


@dataclass(frozen=True)
class FlatnessConfig:
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    samples: int = DEFAULT_SAMPLES
    hvp_eps: float = DEFAULT_HVP_EPS
    seed: int = 0
    workers: int = 1


@dataclass(frozen=True)
class FlatnessReport:
    lambda_max: float
    lambda_max_iterations: int
    lambda_max_residual: float
    lambda_max_converged: bool
    trace_estimate: float
    trace_samples: int
    trace_stderr: float
    mask: tuple[str, ...]
    hvp_epsilon: float

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["mask"] = list(self.mask)
        return data


def flatness_report(
    model: DifferentiableModel,
    w: ParamVector,
    dataset: Dataset,
    mask: GroupMask | None = None,
    config: FlatnessConfig | None = None,
) -> FlatnessReport:
    """Both curvature measures on the full training split of ``dataset``."""
    config = config or FlatnessConfig()
    mask = mask or GroupMask.all(w)
    batch = dataset.train_batch()
    top, power = lambda_max(
        model, w, batch, mask, config.tol, config.max_iter, config.seed, config.hvp_eps
    )
    trace, stderr = trace_hutchinson(
        model, w, batch, mask, config.samples, config.seed, config.hvp_eps, config.workers
    )
    logger.info("lambda_max=%.6g trace=%.6g (+/- %.3g)", top, trace, stderr)
    return FlatnessReport(
        lambda_max=top,
        lambda_max_iterations=power.iterations,
        lambda_max_residual=power.residual,
        lambda_max_converged=power.converged,
        trace_estimate=trace,
        trace_samples=config.samples,
        trace_stderr=stderr,
        mask=tuple(name for name in w.group_names if name in mask.included),
        hvp_epsilon=config.hvp_eps,
    )
