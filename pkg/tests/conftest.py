"""Shared fixtures and helpers for the nlslab test suite."""

import numpy as np
import pytest

from nlslab.fields import Field, GridSpec


def gaussian_field(grid: GridSpec, width: float = 1.0, amplitude: float = 1.0,
                   velocity=None) -> Field:
    """Centered Gaussian amplitude * exp(-|x|^2 / (2 width^2)) e^{i v.x}."""
    r2 = sum(np.asarray(c) ** 2 for c in grid.x)
    vals = amplitude * np.exp(-r2 / (2.0 * width ** 2)) + 0.0j
    if velocity is not None:
        phase = sum(v * np.asarray(c) for v, c in zip(velocity, grid.x))
        vals = vals * np.exp(1j * phase)
    return Field(grid, vals + np.zeros(grid.shape))


def sech_field(grid: GridSpec, amplitude: float = 1.0) -> Field:
    assert grid.n == 1
    return Field(grid, amplitude / np.cosh(grid.axis) + 0.0j)


def random_complex_field(grid: GridSpec, seed: int, smooth: float = 1.0) -> Field:
    """Reproducible smooth complex field (Gaussian-damped random spectrum)."""
    rng = np.random.default_rng(seed)
    spec = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    spec *= np.exp(-smooth * grid.k_sq)
    vals = np.fft.ifftn(spec, norm="ortho")
    return Field(grid, vals)


@pytest.fixture
def grid1d():
    return GridSpec(n=1, N=256, L=15.0)


@pytest.fixture
def grid2d():
    return GridSpec(n=2, N=64, L=8.0)


@pytest.fixture
def grid3d():
    return GridSpec(n=3, N=32, L=6.0)
