"""Shared fixtures: the committed two-state model and small helper builders."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from ctsg import io as artifacts
from ctsg.model import GameModel, LyapunovCertificate

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def two_state_model() -> GameModel:
    return artifacts.load_model(FIXTURES / "two_state_model.json")


@pytest.fixture(scope="session")
def two_state_cert() -> LyapunovCertificate:
    return artifacts.load_certificate(FIXTURES / "two_state_cert.json")


def single_state_model(r0: float, g0: float = 0.0, theta: float = 1.0, T: float = 1.0) -> GameModel:
    """One state, one action per player, no jumps."""
    return GameModel(
        actions_p1=[[0]],
        actions_p2=[[0]],
        payoff=[np.array([[r0]])],
        generator=[np.zeros((1, 1, 1))],
        terminal=np.array([g0]),
        theta=theta,
        horizon=T,
    )


def random_bounded_model(
    rng: np.random.Generator,
    n_states: int = 2,
    n_actions: int = 2,
    rate_scale: float = 1.0,
    payoff_scale: float = 1.0,
) -> GameModel:
    """Random conservative model for property tests."""
    payoff = []
    generator = []
    for x in range(n_states):
        payoff.append(rng.uniform(-payoff_scale, payoff_scale, size=(n_actions, n_actions)))
        q = np.zeros((n_actions, n_actions, n_states))
        for a in range(n_actions):
            for b in range(n_actions):
                rates = rng.uniform(0.0, rate_scale, size=n_states)
                rates[x] = 0.0
                q[a, b] = rates
                q[a, b, x] = -rates.sum()
        generator.append(q)
    return GameModel(
        actions_p1=[list(range(n_actions))] * n_states,
        actions_p2=[list(range(n_actions))] * n_states,
        payoff=payoff,
        generator=generator,
        terminal=rng.uniform(-0.5, 0.5, size=n_states),
        theta=1.0,
        horizon=1.0,
    )
