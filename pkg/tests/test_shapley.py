"""Backward operator: weighted payoff, game value field, integration, contraction."""

from __future__ import annotations

import math

import numpy as np
import pytest

from ctsg.errors import ModelScaleError
from ctsg.model import GameModel
from ctsg.shapley import (
    TimeGrid,
    ValueGrid,
    apply_gamma,
    game_value_field,
    weighted_payoff,
)
from ctsg.solver import SolverConfig, solve

from .conftest import random_bounded_model, single_state_model


def constant_grid(n_t: int, values: np.ndarray, T: float = 1.0) -> ValueGrid:
    return ValueGrid(TimeGrid(T, n_t), np.tile(values, (n_t + 1, 1)))


class TestTimeGrid:
    def test_nodes(self):
        grid = TimeGrid(2.0, 4)
        np.testing.assert_allclose(grid.nodes, [0.0, 0.5, 1.0, 1.5, 2.0])
        assert grid.interval_index(0.0) == 0
        assert grid.interval_index(2.0) == 3

    def test_bad_grid(self):
        with pytest.raises(ValueError):
            TimeGrid(1.0, 0)


class TestWeightedPayoff:
    def test_constant_grid_annihilated(self):
        # conservative rows annihilate constants; r = 0 gives c = 0
        model = random_bounded_model(np.random.default_rng(0), n_states=3)
        model.payoff = [np.zeros_like(p) for p in model.payoff]
        v = constant_grid(4, np.ones(3))
        for x in range(3):
            np.testing.assert_allclose(weighted_payoff(model, v, 2, x), 0.0, atol=1e-14)

    def test_constant_payoff(self):
        model = random_bounded_model(np.random.default_rng(1), n_states=2)
        model.payoff = [np.full_like(p, 2.0) for p in model.payoff]
        v = constant_grid(4, np.ones(2))
        np.testing.assert_allclose(weighted_payoff(model, v, 0, 0), 2.0, atol=1e-14)

    def test_dot_product(self):
        # v(t, .) = (1, 3), q row (-1, 1), theta = 1, r = 0 -> c = 2
        model = GameModel(
            actions_p1=[[0], [0]],
            actions_p2=[[0], [0]],
            payoff=[np.zeros((1, 1)), np.zeros((1, 1))],
            generator=[
                np.array([[-1.0, 1.0]]).reshape(1, 1, 2),
                np.array([[1.0, -1.0]]).reshape(1, 1, 2),
            ],
            terminal=np.zeros(2),
            theta=1.0,
            horizon=1.0,
        )
        v = constant_grid(2, np.array([1.0, 3.0]))
        assert weighted_payoff(model, v, 0, 0)[0, 0] == pytest.approx(2.0)


class TestGameValueField:
    def test_zero_payoff_zero_field(self):
        model = random_bounded_model(np.random.default_rng(2), n_states=2)
        model.payoff = [np.zeros_like(p) for p in model.payoff]
        v = constant_grid(4, np.ones(2))
        a_field, _ = game_value_field(model, v)
        np.testing.assert_allclose(a_field, 0.0, atol=1e-12)

    def test_single_cell_scaling(self):
        # 1x1 game: a(t, x) = theta r0 v(t, x)
        model = single_state_model(r0=0.7, theta=2.0)
        v = ValueGrid(TimeGrid(1.0, 3), np.array([[1.0], [2.0], [3.0], [4.0]]))
        a_field, policies = game_value_field(model, v)
        np.testing.assert_allclose(a_field[:, 0], 2.0 * 0.7 * np.array([1.0, 2.0, 3.0, 4.0]))
        np.testing.assert_allclose(policies.pi1[0], 1.0)


class TestApplyGamma:
    def test_fixed_point_of_trivial_model(self):
        model = random_bounded_model(np.random.default_rng(3), n_states=2)
        model.payoff = [np.zeros_like(p) for p in model.payoff]
        model.terminal = np.zeros(2)
        v = constant_grid(6, np.ones(2))
        v_next, _ = apply_gamma(model, v)
        np.testing.assert_allclose(v_next.values, 1.0, atol=1e-14)

    def test_one_step_linear(self):
        # constant integrand: one application of the operator to v = 1 gives
        # 1 + theta r0 (T - t); trapezoid is exact for constants
        model = single_state_model(r0=0.3)
        v = constant_grid(5, np.ones(1))
        v_next, _ = apply_gamma(model, v)
        t = v.grid.nodes
        np.testing.assert_allclose(v_next.values[:, 0], 1.0 + 0.3 * (1.0 - t), atol=1e-14)

    def test_boundary_row_exact(self):
        model = random_bounded_model(np.random.default_rng(4), n_states=3)
        v = constant_grid(4, np.array([2.0, 0.5, 1.5]))
        v_next, _ = apply_gamma(model, v)
        np.testing.assert_array_equal(v_next.values[-1], np.exp(model.theta * model.terminal))

    def test_terminal_overflow_detected(self):
        model = single_state_model(r0=0.0, g0=1000.0)
        with pytest.raises(ModelScaleError):
            apply_gamma(model, constant_grid(2, np.ones(1)))


def test_iterated_contraction_bound():
    """Sup-norm gap of iterated applications respects the factorial envelope."""
    rng = np.random.default_rng(7)
    model = random_bounded_model(rng, n_states=2, rate_scale=0.9, payoff_scale=0.8)
    l_tilde = model.theta * model.norm_r + 2.0 * model.norm_q
    T = model.horizon
    grid = TimeGrid(T, 200)
    v = ValueGrid(grid, rng.uniform(0.5, 2.0, size=(201, 2)))
    w = ValueGrid(grid, rng.uniform(0.5, 2.0, size=(201, 2)))
    gap0 = float(np.max(np.abs(v.values - w.values)))
    for n in range(1, 7):
        v, _ = apply_gamma(model, v)
        w, _ = apply_gamma(model, w)
        gap = float(np.max(np.abs(v.values - w.values)))
        assert gap <= 1.05 * l_tilde**n * T**n / math.factorial(n) * gap0


def test_monotone_in_time_for_nonnegative_model(two_state_model):
    v, _, report = solve(two_state_model, SolverConfig(epsilon=1e-6, n_t=96))
    assert report.converged
    increments = np.diff(v.values, axis=0)
    assert np.all(increments <= 1e-9)
