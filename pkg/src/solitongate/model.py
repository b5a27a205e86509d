"""Couplings, Pöschl-Teller potential landscapes and bright-soliton fields."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, WrapAroundWarning
from .grid import Grid, quadrature
from .solver import State

TAIL_TOLERANCE = 1e-6


def sech(z):
    # exp(-|z|) form avoids the cosh overflow warning far from the center
    z = np.abs(z)
    e = np.exp(-z)
    return 2.0 * e / (1.0 + e * e)


@dataclass(frozen=True)
class Couplings:
    g11: float = 1.0
    g22: float = 1.0
    g12: float = 0.0

    def __post_init__(self):
        for name in ("g11", "g22", "g12"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigurationError(f"coupling {name} must be finite")
        if self.g12 < 0:
            raise ConfigurationError(f"cross coupling g12 must be >= 0, got {self.g12}")

    def matrix(self) -> np.ndarray:
        return np.array([[self.g11, self.g12], [self.g12, self.g22]], dtype=float)


@dataclass(frozen=True)
class PotentialWell:
    """Attractive well ``-depth * sech^2((x - center) / width)``."""

    depth: float
    width: float
    center: float = 0.0

    def __post_init__(self):
        if not self.depth > 0:
            raise ConfigurationError(f"well depth must be positive, got {self.depth}")
        if not self.width > 0:
            raise ConfigurationError(f"well width must be positive, got {self.width}")


@dataclass(frozen=True)
class PotentialConfig:
    wells: tuple[PotentialWell, ...] = field(default_factory=tuple)

    def __post_init__(self):
        wells = tuple(self.wells)
        if len(wells) > 2:
            raise ConfigurationError(f"at most two wells are supported, got {len(wells)}")
        centers = [w.center for w in wells]
        if len(set(centers)) != len(centers):
            raise ConfigurationError("well centers must be distinct")
        object.__setattr__(self, "wells", wells)


@dataclass(frozen=True)
class SolitonSpec:
    amplitude: float
    velocity: float = 0.0
    center: float = 0.0

    def __post_init__(self):
        if not self.amplitude > 0:
            raise ConfigurationError(f"soliton amplitude must be positive, got {self.amplitude}")
        if not (math.isfinite(self.velocity) and math.isfinite(self.center)):
            raise ConfigurationError("soliton velocity and center must be finite")


def potential_values(config: PotentialConfig, grid: Grid) -> np.ndarray:
    values = np.zeros(grid.points)
    for well in config.wells:
        values -= well.depth * sech((grid.x - well.center) / well.width) ** 2
    return values


def reflectionless_width(depth: float, order: int = 1) -> float:
    """Width at which ``depth * width**2 = order*(order+1)/2``.

    A well of that width transmits linear waves without reflection.
    """
    if not depth > 0:
        raise ConfigurationError(f"depth must be positive, got {depth}")
    if int(order) != order or order < 1:
        raise ConfigurationError(f"order must be a positive integer, got {order}")
    return math.sqrt(order * (order + 1) / (2.0 * depth))


def soliton_field(spec: SolitonSpec, grid: Grid) -> np.ndarray:
    """Sample ``u sech(u(x-x0)) exp(i v (x-x0))`` on the grid."""
    u, v, x0 = spec.amplitude, spec.velocity, spec.center
    shifted = grid.x - x0
    values = u * sech(u * shifted) * np.exp(1j * v * shifted)
    edge = max(abs(values[0]), abs(values[-1]))
    if edge > TAIL_TOLERANCE * u:
        warnings.warn(
            f"soliton at x0={x0} (u={u}) has edge amplitude {edge:.2e}; "
            "tail wraps around the periodic domain",
            WrapAroundWarning,
            stacklevel=2,
        )
    return values


def initial_state(spec1: SolitonSpec, spec2: SolitonSpec, grid: Grid) -> State:
    psi1 = soliton_field(spec1, grid)
    psi2 = soliton_field(spec2, grid)
    norms = (quadrature(np.abs(psi1) ** 2, grid), quadrature(np.abs(psi2) ** 2, grid))
    return State(psi1, psi2, 0.0, norms)
