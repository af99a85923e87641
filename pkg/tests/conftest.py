import numpy as np
import pytest

from sqglab.constants import FracParams
from sqglab.plasma import GridSpec, solve_ground_state


@pytest.fixture(scope="session")
def profile_s05():
    """Ground state at (s, gamma) = (0.5, 2.5), production resolution."""
    return solve_ground_state(FracParams(s=0.5, gamma=2.5), GridSpec(n_cells=400))


@pytest.fixture(scope="session")
def profile_s05_fine():
    """Same state at doubled resolution, shared by the refinement criteria."""
    return solve_ground_state(FracParams(s=0.5, gamma=2.5), GridSpec(n_cells=800))


@pytest.fixture(scope="session")
def profile_s075():
    return solve_ground_state(FracParams(s=0.75, gamma=2.5), GridSpec(n_cells=400))


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
