"""Uniform periodic grid and its spectral wavenumbers."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .errors import ConfigurationError

DEFAULT_LENGTH = 256.0
DEFAULT_POINTS = 4096


@dataclass(frozen=True)
class Grid:
    """Periodic grid on [-L/2, L/2) with ``points`` samples.

    ``x`` and ``k`` are read-only arrays; ``k`` follows the FFT ordering.
    """

    length: float
    points: int
    dx: float = field(init=False)
    x: np.ndarray = field(init=False, repr=False, compare=False)
    k: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not np.isfinite(self.length) or self.length <= 0:
            raise ConfigurationError(f"domain length must be positive, got {self.length}")
        if int(self.points) != self.points or self.points < 2 or self.points % 2:
            raise ConfigurationError(f"grid points must be an even integer >= 2, got {self.points}")
        object.__setattr__(self, "length", float(self.length))
        object.__setattr__(self, "points", int(self.points))
        dx = self.length / self.points
        x = -0.5 * self.length + dx * np.arange(self.points)
        k = 2.0 * np.pi * sfft.fftfreq(self.points, d=dx)
        x.setflags(write=False)
        k.setflags(write=False)
        object.__setattr__(self, "dx", dx)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "k", k)


def make_grid(length: float = DEFAULT_LENGTH, points: int = DEFAULT_POINTS) -> Grid:
    return Grid(length, points)


def quadrature(values, grid: Grid) -> float:
    """Rectangle-rule integral of ``values`` over the periodic grid."""
    values = np.asarray(values)
    if values.shape[-1] != grid.points:
        raise ValueError(f"expected {grid.points} samples, got {values.shape[-1]}")
    return float(grid.dx * np.sum(values))


def spectral_derivative(values, grid: Grid, order: int = 1) -> np.ndarray:
    """Derivative of a periodic sampled function computed in Fourier space."""
    spectrum = sfft.fft(np.asarray(values, dtype=complex))
    out = sfft.ifft((1j * grid.k) ** order * spectrum)
    if np.isrealobj(values):
        return out.real
    return out
