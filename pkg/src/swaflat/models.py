"""Small differentiable models with analytic gradients."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Protocol

import numpy as np
from numpy.typing import ArrayLike, NDArray

from swaflat import rng
from swaflat.errors import LayoutError, NumericError
from swaflat.params import FloatArray, Group, Layout, ParamVector

Activation = Literal["tanh", "relu"]
LossKind = Literal["softmax-cross-entropy", "mean-squared-error"]


@dataclass(frozen=True)
class Batch:
    """Rows of inputs with either class indices or regression targets."""

    inputs: FloatArray
    targets: NDArray[np.int64] | FloatArray

    def __post_init__(self) -> None:
        inputs = np.asarray(self.inputs, dtype=np.float64)
        if inputs.ndim == 1:
            inputs = inputs.reshape(1, -1)
        targets = np.asarray(self.targets)
        if inputs.shape[0] < 1:
            raise ValueError("A batch needs at least one row")
        if targets.shape[0] != inputs.shape[0]:
            raise ValueError(
                f"Batch has {inputs.shape[0]} input rows but {targets.shape[0]} targets"
            )
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "targets", targets)

    @property
    def size(self) -> int:
        return int(self.inputs.shape[0])


class DifferentiableModel(Protocol):
    """Anything the optimizers and flatness estimators can differentiate."""

    def layout(self) -> Layout: ...

    def loss(self, w: ParamVector, batch: Batch) -> float: ...

    def grad(self, w: ParamVector, batch: Batch) -> ParamVector: ...


def _tanh_prime(z: FloatArray, a: FloatArray) -> FloatArray:
    return 1.0 - a * a


def _relu_prime(z: FloatArray, a: FloatArray) -> FloatArray:
    # Subgradient at 0 is 0.
    return (z > 0.0).astype(np.float64)


_ACTIVATIONS = {
    "tanh": (np.tanh, _tanh_prime),
    "relu": (lambda z: np.maximum(z, 0.0), _relu_prime),
}


@dataclass(frozen=True)
class ModelSpec:
    """Fully connected network: ``layer_sizes`` runs input -> hidden... -> output.

    Hidden layers apply ``activation``; the output layer is linear and feeds
    ``loss``. ``l2_coeff`` adds ``0.5 * l2_coeff * ||w||^2`` to the loss;
    decoupled weight decay belongs to the optimizer instead.
    """

    layer_sizes: tuple[int, ...]
    activation: Activation = "tanh"
    loss_kind: LossKind = "softmax-cross-entropy"
    l2_coeff: float = 0.0
    bias: bool = True
    _layout: Layout = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        sizes = tuple(int(size) for size in self.layer_sizes)
        if len(sizes) < 2:
            raise ValueError("A model needs at least an input and an output size")
        if any(size < 1 for size in sizes):
            raise ValueError(f"Layer sizes must be positive: {sizes}")
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"Unknown activation: {self.activation}")
        if self.loss_kind not in ("softmax-cross-entropy", "mean-squared-error"):
            raise ValueError(f"Unknown loss: {self.loss_kind}")
        if self.l2_coeff < 0:
            raise ValueError(f"l2_coeff must be non-negative, got {self.l2_coeff}")
        object.__setattr__(self, "layer_sizes", sizes)
        groups: list[Group] = []
        offset = 0
        for index, (n_in, n_out) in enumerate(self.shapes):
            groups.append(Group(f"layer{index}.weight", offset, n_in * n_out))
            offset += n_in * n_out
            if self.bias:
                groups.append(Group(f"layer{index}.bias", offset, n_out))
                offset += n_out
        object.__setattr__(self, "_layout", tuple(groups))

    @property
    def shapes(self) -> list[tuple[int, int]]:
        """(n_in, n_out) per layer."""
        return list(zip(self.layer_sizes[:-1], self.layer_sizes[1:], strict=True))

    @property
    def input_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_dim(self) -> int:
        return self.layer_sizes[-1]

    @property
    def num_params(self) -> int:
        extra = 1 if self.bias else 0
        return sum((n_in + extra) * n_out for n_in, n_out in self.shapes)

    @property
    def is_classifier(self) -> bool:
        return self.loss_kind == "softmax-cross-entropy"

    def layout(self) -> Layout:
        return self._layout

    # -- parameters -------------------------------------------------------

    def _unpack(self, w: ParamVector) -> list[tuple[FloatArray, FloatArray | None]]:
        if w.groups != self._layout:
            raise LayoutError(
                f"Weights with {len(w)} values in groups {list(w.group_names)} "
                f"do not fit a {self.layer_sizes} model ({self.num_params} parameters)"
            )
        layers = []
        for index, (n_in, n_out) in enumerate(self.shapes):
            weight = w.group(f"layer{index}.weight").reshape(n_out, n_in)
            bias = w.group(f"layer{index}.bias") if self.bias else None
            layers.append((weight, bias))
        return layers

    def _pack(self, parts: list[tuple[FloatArray, FloatArray | None]]) -> ParamVector:
        chunks: list[FloatArray] = []
        for weight, bias in parts:
            chunks.append(weight.reshape(-1))
            if bias is not None:
                chunks.append(bias)
        return ParamVector._wrap(np.concatenate(chunks), self._layout)

    # -- forward / backward -----------------------------------------------

    def _check_batch(self, batch: Batch) -> None:
        if batch.inputs.shape[1] != self.input_dim:
            raise LayoutError(
                f"Batch has {batch.inputs.shape[1]} input columns, model expects {self.input_dim}"
            )
        if self.is_classifier:
            targets = batch.targets
            if targets.ndim != 1 or not np.issubdtype(targets.dtype, np.integer):
                raise LayoutError("Classification targets must be a vector of class indices")
            if targets.size and (targets.min() < 0 or targets.max() >= self.output_dim):
                raise LayoutError(
                    f"Class indices must lie in [0, {self.output_dim}), "
                    f"got [{targets.min()}, {targets.max()}]"
                )
        else:
            targets = batch.targets.reshape(batch.size, -1)
            if targets.shape[1] != self.output_dim:
                raise LayoutError(
                    f"Regression targets have {targets.shape[1]} columns, "
                    f"model outputs {self.output_dim}"
                )

    def _forward(
        self, layers: list[tuple[FloatArray, FloatArray | None]], inputs: FloatArray
    ) -> tuple[list[FloatArray], list[FloatArray]]:
        """Return pre-activations and activations (activations[0] is the input)."""
        act, _ = _ACTIVATIONS[self.activation]
        activations = [inputs]
        pre = []
        last = len(layers) - 1
        for index, (weight, bias) in enumerate(layers):
            z = activations[-1] @ weight.T
            if bias is not None:
                z = z + bias
            if not np.isfinite(z).all():
                raise NumericError("non-finite pre-activations", location=f"layer {index}")
            pre.append(z)
            activations.append(z if index == last else act(z))
        return pre, activations

    def outputs(self, w: ParamVector, inputs: ArrayLike) -> FloatArray:
        """Network outputs (logits for classifiers) for a matrix of inputs."""
        layers = self._unpack(w)
        _, activations = self._forward(layers, np.asarray(inputs, dtype=np.float64))
        return activations[-1]

    def _output_loss(self, out: FloatArray, batch: Batch) -> tuple[float, FloatArray]:
        """Mean loss over rows and its gradient w.r.t. the outputs."""
        rows = batch.size
        if self.is_classifier:
            shifted = out - out.max(axis=1, keepdims=True)
            log_norm = np.log(np.exp(shifted).sum(axis=1))
            targets = batch.targets.astype(np.int64)
            picked = shifted[np.arange(rows), targets]
            value = float(np.mean(log_norm - picked))
            probs = np.exp(shifted - log_norm[:, None])
            probs[np.arange(rows), targets] -= 1.0
            return value, probs / rows
        residual = out - batch.targets.reshape(rows, -1)
        value = float(np.mean(np.sum(residual * residual, axis=1)))
        return value, 2.0 * residual / rows

    def loss(self, w: ParamVector, batch: Batch) -> float:
        value, _ = self.value_and_grad(w, batch, need_grad=False)
        return value

    def grad(self, w: ParamVector, batch: Batch) -> ParamVector:
        _, gradient = self.value_and_grad(w, batch)
        assert gradient is not None
        return gradient

    def value_and_grad(
        self, w: ParamVector, batch: Batch, need_grad: bool = True
    ) -> tuple[float, ParamVector | None]:
        """Loss and (optionally) its analytic gradient from one forward pass."""
        self._check_batch(batch)
        layers = self._unpack(w)
        pre, activations = self._forward(layers, batch.inputs)
        value, delta = self._output_loss(activations[-1], batch)
        if self.l2_coeff:
            value += 0.5 * self.l2_coeff * float(np.dot(w.values, w.values))
        if not math.isfinite(value):
            raise NumericError("non-finite loss", location="output layer")
        if not need_grad:
            return value, None

        _, act_prime = _ACTIVATIONS[self.activation]
        grads: list[tuple[FloatArray, FloatArray | None]] = []
        for index in range(len(layers) - 1, -1, -1):
            weight, bias = layers[index]
            grad_weight = delta.T @ activations[index]
            grad_bias = delta.sum(axis=0) if bias is not None else None
            grads.append((grad_weight, grad_bias))
            if index > 0:
                upstream = delta @ weight
                delta = upstream * act_prime(pre[index - 1], activations[index])
        grads.reverse()
        gradient = self._pack(grads)
        if self.l2_coeff:
            gradient = ParamVector._wrap(gradient.values + self.l2_coeff * w.values, self._layout)
        if not np.isfinite(gradient.values).all():
            raise NumericError("non-finite gradient", location="backward pass")
        return value, gradient

    def init_weights(self, seed: int) -> ParamVector:
        """Uniform in [-s, s] with ``s = sqrt(6 / (n_in + n_out))``; zero biases."""
        gen = rng.generator(seed, "init")
        parts: dict[str, FloatArray] = {}
        for index, (n_in, n_out) in enumerate(self.shapes):
            limit = math.sqrt(6.0 / (n_in + n_out))
            parts[f"layer{index}.weight"] = gen.uniform(-limit, limit, size=n_in * n_out)
            if self.bias:
                parts[f"layer{index}.bias"] = np.zeros(n_out)
        return ParamVector.from_groups(parts)

    def evaluate(self, w: ParamVector, batch: Batch) -> dict[str, float]:
        """Loss plus accuracy (classifiers) or RMSE (regressors) on ``batch``."""
        value, _ = self.value_and_grad(w, batch, need_grad=False)
        out = self.outputs(w, batch.inputs)
        if self.is_classifier:
            accuracy = float(np.mean(out.argmax(axis=1) == batch.targets))
            return {"loss": value, "accuracy": accuracy}
        residual = out - batch.targets.reshape(batch.size, -1)
        return {"loss": value, "rmse": float(np.sqrt(np.mean(residual * residual)))}


@dataclass(frozen=True, eq=False)
class QuadraticModel:
    """Loss ``0.5 * w^T A w`` (the batch is ignored); one group per coordinate.

    Useful as a surrogate with a known Hessian ``A``.
    """

    matrix: FloatArray

    def __post_init__(self) -> None:
        matrix = np.asarray(self.matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError(f"Expected a square matrix, got shape {matrix.shape}")
        object.__setattr__(self, "matrix", matrix)

    @property
    def num_params(self) -> int:
        return int(self.matrix.shape[0])

    def layout(self) -> Layout:
        return tuple(Group(f"w{index}", index, 1) for index in range(self.num_params))

    def vector(self, values: ArrayLike) -> ParamVector:
        return ParamVector(values, self.layout())

    def loss(self, w: ParamVector, batch: Batch) -> float:
        return 0.5 * float(w.values @ self.matrix @ w.values)

    def grad(self, w: ParamVector, batch: Batch) -> ParamVector:
        if len(w) != self.num_params:
            raise LayoutError(f"Expected {self.num_params} parameters, got {len(w)}")
        return ParamVector._wrap(self.matrix @ w.values, w.groups)


def loss(model: DifferentiableModel, w: ParamVector, batch: Batch) -> float:
    """Mean loss of ``model`` at ``w`` over the rows of ``batch``."""
    return model.loss(w, batch)


def grad(model: DifferentiableModel, w: ParamVector, batch: Batch) -> ParamVector:
    """Analytic gradient of :func:`loss` with the layout of ``w``."""
    return model.grad(w, batch)
