import numpy as np
import pytest

from llgopt import spectral, state
from llgopt.fields import Trajectory, VectorField3
from llgopt.spectral import Grid


@pytest.fixture
def grid16():
    return Grid(1.0, 1.0, 16, 16)


@pytest.fixture
def grid32():
    return Grid(1.0, 1.0, 32, 32)


@pytest.fixture
def rect_grid():
    return Grid(1.0, 1.3, 32, 48)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


def smooth_random_field(grid, rng, amp=1.0, kmax=4, decay=1.2) -> VectorField3:
    """Vector field with exponentially decaying random cosine coefficients."""
    c = np.zeros((3, grid.nx, grid.ny))
    for j in range(min(kmax, grid.nx)):
        for k in range(min(kmax, grid.ny)):
            c[:, j, k] = amp * rng.standard_normal(3) * np.exp(-decay * (j + k))
    return VectorField3(spectral._synthesize(c, grid), grid)


def angle_initial_data(grid, amp_theta=0.3, amp_phi=0.2):
    """The standing smooth unit-sphere initial state used across tests."""
    X, Y = grid.meshgrid()
    th = amp_theta * np.cos(np.pi * X / grid.lx) * np.cos(np.pi * Y / grid.ly) + 0.2
    ph = amp_phi * np.cos(np.pi * Y / grid.ly)
    return state.make_initial_data(
        spectral.to_spectral(th, grid), spectral.to_spectral(ph, grid), grid
    )


def constant_control(grid, horizon, nt, vec) -> Trajectory:
    return Trajectory.constant(grid, horizon, nt, vec)
