import numpy as np
import pytest

from choicecheck import build_design, draw_parameters, fit_model, simulate_outcomes
from choicecheck.synthetic import labeled_toy


@pytest.fixture(scope="session")
def toy():
    """(dataset, spec, true beta) for a 2-alternative labeled problem."""
    return labeled_toy(n_obs=300, seed=3)


@pytest.fixture(scope="session")
def toy_model(toy):
    dataset, spec, _ = toy
    model = fit_model(dataset, spec)
    assert model.converged
    return model


@pytest.fixture(scope="session")
def toy_design(toy):
    dataset, spec, _ = toy
    return build_design(dataset, spec)


@pytest.fixture(scope="session")
def toy_ensemble(toy_model, toy_design):
    draws = draw_parameters(toy_model, 60, seed=21)
    return simulate_outcomes(toy_design, draws, seed=21)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
