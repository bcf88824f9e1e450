"""Tests for the base optimizers."""

import numpy as np
import pytest

from swaflat.errors import LayoutError, NumericError
from swaflat.optimizers import Hyperparameters, OptimizerState, clip_gradient, step
from swaflat.params import ParamVector


def vec(*values: float) -> ParamVector:
    return ParamVector(list(values))


class TestSgd:
    """Tests for plain and momentum SGD."""

    def test_one_step(self) -> None:
        """w=1, g=2, eta=0.1 gives 0.8."""
        opt, w = step(OptimizerState.create("sgd"), vec(1), vec(2), 0.1)
        assert w.values.tolist() == [pytest.approx(0.8)]
        assert opt.step == 1

    def test_momentum_accumulates(self) -> None:
        """Test the momentum buffer carries over between steps."""
        opt = OptimizerState.create("sgd-momentum", momentum=0.9)
        opt, w = step(opt, vec(0), vec(1), 1.0)
        assert w.values.tolist() == [-1.0]
        opt, w = step(opt, w, vec(1), 1.0)
        assert w.values.tolist() == [pytest.approx(-2.9)]

    def test_input_state_not_modified(self) -> None:
        """Test stepping returns a new state and leaves the old one."""
        opt = OptimizerState.create("sgd-momentum", momentum=0.5)
        advanced, _ = step(opt, vec(0), vec(1), 0.1)
        assert opt.step == 0
        assert opt.buffers == ()
        assert advanced.step == 1


class TestAdamW:
    """Tests for AdamW."""

    def test_first_step_moves_by_eta(self) -> None:
        """The bias-corrected first step moves by about eta * sign(g)."""
        opt = OptimizerState.create("adamw", weight_decay=0.0)
        _, w = step(opt, vec(1), vec(1), 0.1)
        assert w.values[0] == pytest.approx(0.9, abs=1e-6)

    def test_sign_not_magnitude(self) -> None:
        """Test the first step depends on gradient sign, not size."""
        opt = OptimizerState.create("adamw", weight_decay=0.0)
        _, w = step(opt, vec(0, 0), vec(1000, -0.001), 0.1)
        np.testing.assert_allclose(w.values, [-0.1, 0.1], rtol=1e-4)

    def test_default_weight_decay(self) -> None:
        """Test only AdamW decays by default."""
        assert OptimizerState.create("adamw").hyper.weight_decay == 0.01
        assert OptimizerState.create("sgd").hyper.weight_decay == 0.0

    def test_decoupled_weight_decay(self) -> None:
        """Decay shrinks the weights even with a zero gradient."""
        opt = OptimizerState.create("adamw", weight_decay=0.5)
        _, w = step(opt, vec(2), vec(0), 0.1)
        assert w.values.tolist() == [pytest.approx(2 - 0.1 * 0.5 * 2)]

    def test_weight_decay_is_linear(self) -> None:
        """Doubling the decay doubles its contribution to a single step."""

        def one_step(decay: float) -> np.ndarray:
            opt = OptimizerState.create("adamw", weight_decay=decay)
            return step(opt, vec(1.5, -2), vec(0.3, 0.7), 0.1)[1].values

        base = one_step(0.0)
        np.testing.assert_allclose(one_step(0.2) - base, 2 * (one_step(0.1) - base), rtol=1e-12)

    def test_moments_tracked(self) -> None:
        """Test AdamW keeps two moment buffers."""
        opt = OptimizerState.create("adamw")
        opt, w = step(opt, vec(1), vec(1), 0.01)
        opt, w = step(opt, w, vec(1), 0.01)
        assert opt.step == 2
        assert len(opt.buffers) == 2


class TestCommon:
    """Tests shared by all optimizer kinds."""

    @pytest.mark.parametrize("kind", ["sgd", "sgd-momentum", "adamw"])
    def test_zero_gradient_keeps_weights(self, kind: str) -> None:
        """Test a zero gradient without decay leaves the weights."""
        opt = OptimizerState.create(kind, weight_decay=0.0)  # type: ignore[arg-type]
        _, w = step(opt, vec(1, -2), vec(0, 0), 0.1)
        assert w.values.tolist() == [1.0, -2.0]

    @pytest.mark.parametrize("kind", ["sgd", "sgd-momentum", "adamw"])
    def test_zero_rate_keeps_weights(self, kind: str) -> None:
        """Test a zero learning rate leaves the weights."""
        opt = OptimizerState.create(kind)  # type: ignore[arg-type]
        _, w = step(opt, vec(1, -2), vec(3, 4), 0.0)
        assert w.values.tolist() == [1.0, -2.0]

    def test_non_finite_gradient(self) -> None:
        """Test a NaN gradient."""
        with pytest.raises(NumericError, match="non-finite gradient"):
            step(OptimizerState.create("sgd"), vec(1), vec(float("nan")), 0.1)

    def test_negative_rate(self) -> None:
        """Test a negative learning rate."""
        with pytest.raises(ValueError, match="non-negative"):
            step(OptimizerState.create("sgd"), vec(1), vec(1), -0.1)

    def test_layout_mismatch(self) -> None:
        """Test a gradient with another layout."""
        with pytest.raises(LayoutError):
            step(OptimizerState.create("sgd"), vec(1, 2), vec(1), 0.1)

    def test_unknown_kind(self) -> None:
        """Test an unknown optimizer kind."""
        with pytest.raises(ValueError, match="Unknown optimizer"):
            OptimizerState("lamb")  # type: ignore[arg-type]

    @pytest.mark.parametrize(
        "kwargs", [{"momentum": 1.0}, {"beta1": -0.1}, {"eps": 0.0}, {"clip_norm": -1.0}]
    )
    def test_invalid_hyperparameters(self, kwargs: dict) -> None:
        """Test hyperparameters outside their ranges."""
        with pytest.raises(ValueError):
            Hyperparameters(**kwargs)


class TestClipping:
    """Tests for global-norm gradient clipping."""

    def test_clip_large_gradient(self) -> None:
        """Test a gradient longer than the limit is scaled to it."""
        assert clip_gradient(vec(3, 4), 1.0).values.tolist() == [
            pytest.approx(0.6),
            pytest.approx(0.8),
        ]

    def test_small_gradient_untouched(self) -> None:
        """Test a short gradient is returned as is."""
        g = vec(0.3, 0.4)
        assert clip_gradient(g, 1.0) is g

    def test_clip_inside_step(self) -> None:
        """Test the step clips before updating."""
        opt = OptimizerState.create("sgd", clip_norm=1.0)
        _, w = step(opt, vec(0, 0), vec(30, 40), 1.0)
        np.testing.assert_allclose(w.values, [-0.6, -0.8])
