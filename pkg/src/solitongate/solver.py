"""Split-step Fourier evolution of the coupled two-component field.

Each step is a Strang splitting of ``i psi_t = [-1/2 d_xx - (G |psi|^2) + V] psi``:
half a step of the pointwise nonlinear+potential phase rotation, a full
kinetic step applied in Fourier space, and another half rotation.  The
rotation is exact because it leaves every ``|psi_j|`` unchanged, which also
means the trailing half rotation of one step and the leading half rotation
of the next can be merged into a single full rotation.  ``evolve`` does that.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numba
import numpy as np
import scipy.fft as sfft

from .errors import ConfigurationError, NumericalBlowupError, WrapAroundWarning
from .grid import Grid

EDGE_TOLERANCE = 1e-4


@dataclass
class State:
    psi1: np.ndarray
    psi2: np.ndarray
    time: float = 0.0
    norms0: Optional[tuple[float, float]] = None

    def __post_init__(self):
        self.psi1 = np.asarray(self.psi1, dtype=complex)
        self.psi2 = np.asarray(self.psi2, dtype=complex)
        if self.psi1.shape != self.psi2.shape or self.psi1.ndim != 1:
            raise ValueError("psi1 and psi2 must be 1-D arrays of equal length")
        if self.norms0 is not None:
            if min(self.norms0) <= 0:
                raise ValueError("initial norms must be positive")
            self.norms0 = (float(self.norms0[0]), float(self.norms0[1]))

    @property
    def fields(self) -> np.ndarray:
        return np.stack([self.psi1, self.psi2])


@dataclass(frozen=True)
class NumericsConfig:
    dt: float = 0.005
    t_final: float = 200.0
    snapshot_stride: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        if not (math.isfinite(self.t_final) and self.t_final >= 0):
            raise ConfigurationError(f"t_final must be non-negative, got {self.t_final}")
        if int(self.snapshot_stride) != self.snapshot_stride or self.snapshot_stride < 0:
            raise ConfigurationError(
                f"snapshot_stride must be a non-negative integer, got {self.snapshot_stride}"
            )

    @property
    def steps(self) -> int:
        return step_count(self.dt, self.t_final)


@dataclass
class Snapshot:
    time: float
    density1: np.ndarray
    density2: np.ndarray


Observer = Callable[[float, np.ndarray, np.ndarray], None]


def step_count(dt: float, t_final: float) -> int:
    # a final step shorter than dt*1e-9 is treated as round-off
    return max(0, math.ceil(t_final / dt - 1e-9))


@numba.njit(cache=True, nogil=True)
def _rotate(psi, potential, coupling, h):
    """Multiply psi[b, c, :] by exp(i h (sum_d G[c, d] |psi_d|^2 - V)) in place.

    Returns the summed density so the caller can detect NaN/Inf cheaply.
    """
    nb, nc, n = psi.shape
    dens = np.empty(nc)
    total = 0.0
    for b in range(nb):
        for i in range(n):
            for c in range(nc):
                z = psi[b, c, i]
                dens[c] = z.real * z.real + z.imag * z.imag
                total += dens[c]
            for c in range(nc):
                s = 0.0
                for d in range(nc):
                    s += coupling[c, d] * dens[d]
                phase = h * (s - potential[b, i])
                psi[b, c, i] = psi[b, c, i] * complex(math.cos(phase), math.sin(phase))
    return total


def _edge_exceeded(psi: np.ndarray) -> bool:
    dens = psi.real**2 + psi.imag**2
    peak = dens.max(axis=-1)
    edge = np.maximum(dens[..., 0], dens[..., -1])
    return bool(np.any(edge > EDGE_TOLERANCE * peak))


def propagate(
    fields: np.ndarray,
    potential: np.ndarray,
    coupling: np.ndarray,
    grid: Grid,
    dt: float,
    t_final: float,
    t0: float = 0.0,
    snapshot_stride: int = 0,
    on_snapshot: Optional[Callable[[float, np.ndarray], None]] = None,
) -> np.ndarray:
    """Evolve a batch of independent systems and return the final fields.

    ``fields`` has shape (batch, components, N); ``potential`` is (N,) or
    (batch, N); ``coupling`` is the (components, components) matrix of
    nonlinear coefficients.  ``on_snapshot(t, density)`` is called at t0 and
    after every ``snapshot_stride`` steps.
    """
    psi = np.array(fields, dtype=np.complex128, order="C")
    if psi.ndim != 3 or psi.shape[-1] != grid.points:
        raise ValueError(f"fields must have shape (batch, components, {grid.points})")
    nb, nc, _ = psi.shape
    pot = np.ascontiguousarray(np.broadcast_to(np.asarray(potential, dtype=float), (nb, grid.points)))
    coupling = np.ascontiguousarray(coupling, dtype=float)
    if coupling.shape != (nc, nc):
        raise ValueError(f"coupling matrix must be {nc}x{nc}")

    n = step_count(dt, t_final)
    if snapshot_stride and on_snapshot is not None:
        on_snapshot(t0, psi.real**2 + psi.imag**2)
    if n == 0:
        return psi

    last = t_final - (n - 1) * dt
    kinetic = np.exp(-0.5j * dt * grid.k**2)
    kinetic_last = kinetic if last == dt else np.exp(-0.5j * last * grid.k**2)
    edge_every = max(1, round(1.0 / dt))
    warned = False

    _rotate(psi, pot, coupling, 0.5 * (dt if n > 1 else last))
    for i in range(n):
        final = i == n - 1
        psi = sfft.fft(psi, axis=-1, overwrite_x=True)
        psi *= kinetic_last if final else kinetic
        psi = sfft.ifft(psi, axis=-1, overwrite_x=True)
        if final:
            h = 0.5 * last
            t = t0 + t_final
        else:
            h = 0.5 * dt + 0.5 * (last if i == n - 2 else dt)
            t = t0 + (i + 1) * dt
        total = _rotate(psi, pot, coupling, h)
        if not math.isfinite(total):
            raise NumericalBlowupError(t)
        recording = snapshot_stride and (i + 1) % snapshot_stride == 0
        if recording and on_snapshot is not None:
            on_snapshot(t, psi.real**2 + psi.imag**2)
        if not warned and (final or recording or (i + 1) % edge_every == 0) and _edge_exceeded(psi):
            warnings.warn(
                f"density at the periodic boundary exceeds {EDGE_TOLERANCE:g} of peak at t={t:.4g}",
                WrapAroundWarning,
                stacklevel=2,
            )
            warned = True
    return psi


def _check_shapes(state: State, potential: np.ndarray, grid: Grid):
    if state.psi1.shape[0] != grid.points:
        raise ValueError(f"state has {state.psi1.shape[0]} points, grid has {grid.points}")
    if np.shape(potential) != (grid.points,):
        raise ValueError(f"potential must have shape ({grid.points},)")


def step(state: State, potential, couplings, grid: Grid, dt: float) -> State:
    """Advance ``state`` by one Strang step of length ``dt``."""
    if not dt > 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    _check_shapes(state, potential, grid)
    out = propagate(state.fields[None], potential, couplings.matrix(), grid, dt, dt, t0=state.time)
    return State(out[0, 0], out[0, 1], state.time + dt, state.norms0)


def evolve(
    state: State,
    potential,
    couplings,
    grid: Grid,
    numerics: NumericsConfig,
    observer: Optional[Observer] = None,
) -> tuple[State, Optional[list[Snapshot]]]:
    """Evolve to ``state.time + numerics.t_final``.

    With a positive ``snapshot_stride`` the densities are recorded at the
    start and every ``snapshot_stride`` steps, passed to ``observer`` and
    returned as a list; otherwise the second element is None.
    """
    _check_shapes(state, potential, grid)
    snapshots: Optional[list[Snapshot]] = [] if numerics.snapshot_stride else None

    def record(t, density):
        snap = Snapshot(t, density[0, 0].copy(), density[0, 1].copy())
        snapshots.append(snap)
        if observer is not None:
            observer(snap.time, snap.density1, snap.density2)

    out = propagate(
        state.fields[None],
        potential,
        couplings.matrix(),
        grid,
        numerics.dt,
        numerics.t_final,
        t0=state.time,
        snapshot_stride=numerics.snapshot_stride,
        on_snapshot=record if snapshots is not None else None,
    )
    final = State(out[0, 0], out[0, 1], state.time + numerics.t_final, state.norms0)
    return final, snapshots
