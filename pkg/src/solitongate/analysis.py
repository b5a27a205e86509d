"""Transport coefficients and position readout of the final state."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AmbiguousReadoutError, ConfigurationError
from .grid import Grid, quadrature, spectral_derivative
from .solver import State


@dataclass(frozen=True)
class AnalysisRegion:
    """Interval [l1, l2] enclosing the wells."""

    l1: float = -15.0
    l2: float = 15.0

    def __post_init__(self):
        if not self.l1 < self.l2:
            raise ConfigurationError(f"analysis region needs l1 < l2, got ({self.l1}, {self.l2})")

    def check(self, grid: Grid):
        if not (grid.x[0] < self.l1 and self.l2 < grid.x[-1]):
            raise ConfigurationError(
                f"analysis region [{self.l1}, {self.l2}] must lie strictly inside the domain"
            )


@dataclass(frozen=True)
class Coefficients:
    reflection: float
    trapping: float
    transmission: float

    @property
    def total(self) -> float:
        return self.reflection + self.trapping + self.transmission


@dataclass(frozen=True)
class TransportResult:
    components: tuple[Coefficients, ...]
    region: AnalysisRegion

    def __getitem__(self, j: int) -> Coefficients:
        return self.components[j]

    @property
    def min_reflection(self) -> float:
        return min(c.reflection for c in self.components)

    @property
    def min_transmission(self) -> float:
        return min(c.transmission for c in self.components)


def region_masks(grid: Grid, region: AnalysisRegion):
    """Boolean masks (left, inside, right); every point lands in exactly one."""
    left = grid.x < region.l1
    right = grid.x > region.l2
    return left, ~(left | right), right


def coefficients(density: np.ndarray, norm0: float, grid: Grid, region: AnalysisRegion) -> Coefficients:
    left, inside, right = region_masks(grid, region)
    return Coefficients(
        grid.dx * float(density[left].sum()) / norm0,
        grid.dx * float(density[inside].sum()) / norm0,
        grid.dx * float(density[right].sum()) / norm0,
    )


def transport(state: State, grid: Grid, region: AnalysisRegion | None = None) -> TransportResult:
    """Fractions of each component's initial norm left of, inside and right of the region."""
    if state.norms0 is None:
        raise ValueError("state has no cached initial norms")
    region = region or AnalysisRegion()
    region.check(grid)
    comps = tuple(
        coefficients(np.abs(psi) ** 2, n0, grid, region)
        for psi, n0 in zip((state.psi1, state.psi2), state.norms0)
    )
    return TransportResult(comps, region)


def center_of_mass(field: np.ndarray, grid: Grid) -> float:
    density = np.abs(field) ** 2
    norm = quadrature(density, grid)
    if not norm > 0:
        raise ValueError("center of mass of a zero field is undefined")
    return quadrature(grid.x * density, grid) / norm


def peak_position(field: np.ndarray, grid: Grid) -> float:
    """Location of the largest |field|; a cross-check for ``center_of_mass``."""
    return float(grid.x[np.argmax(np.abs(field))])


def mean_velocity(field: np.ndarray, grid: Grid) -> float:
    """Expectation of the momentum operator, i.e. the group velocity of a soliton."""
    density = np.abs(field) ** 2
    current = np.imag(np.conj(field) * spectral_derivative(field, grid))
    return quadrature(current, grid) / quadrature(density, grid)


def read_target(state: State, grid: Grid, tolerance: float | None = None) -> int:
    """Decode the target bit: 0 when component 1 sits right of component 2."""
    eps = 2.0 * grid.dx if tolerance is None else tolerance
    gap = center_of_mass(state.psi1, grid) - center_of_mass(state.psi2, grid)
    if gap > eps:
        return 0
    if gap < -eps:
        return 1
    raise AmbiguousReadoutError(f"component centers differ by {gap:.3g}, within +/-{eps:.3g}")
