"""Shared fixtures and field generators for the test suite."""

import numpy as np
import pytest

from rieszflow import make_grid


def smooth_field(grid, rng, decay=4.0):
    """Mean-zero random field with analytic spectral decay.

    Content on the Nyquist planes is removed, so the field lies in the
    subspace where odd multipliers and the Hodge split are exact.
    """
    spec = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    spec *= np.exp(-((grid.xi_norm / decay) ** 2))
    spec[~grid.dealias_mask(1.0)] = 0.0
    f = np.fft.ifftn(spec).real
    f -= f.mean()
    return f


def smooth_vector(grid, rng, decay=4.0):
    return np.stack([smooth_field(grid, rng, decay) for _ in range(grid.dim)])


@pytest.fixture
def grid_1d():
    return make_grid(dim=1, lengths=2.0 * np.pi, modes=64)


@pytest.fixture
def grid_2d():
    return make_grid(dim=2, lengths=2.0 * np.pi, modes=32)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
