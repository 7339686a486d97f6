import numpy as np
import pytest

from moldelays.model import build_model, default_ground_grid, ground_state


@pytest.fixture(scope="session")
def paper_model():
    return build_model(0.33, 0.198, 1.115)


@pytest.fixture(scope="session")
def paper_ground(paper_model):
    return ground_state(paper_model, default_ground_grid())


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
