"""Parameter scans over soliton velocity and amplitude.

Every scan point boils down to a handful of independent scattering runs.
Runs are de-duplicated, grouped into fixed-size batches in a fixed order and
propagated together, so results do not depend on the worker count.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .analysis import AnalysisRegion, Coefficients, coefficients
from .errors import ConfigurationError, NumericalBlowupError, WrapAroundWarning
from .gate import GateParams
from .grid import Grid, make_grid, quadrature
from .model import Couplings, PotentialConfig, SolitonSpec, potential_values, soliton_field
from .parallel import run_tasks
from .solver import NumericsConfig, propagate

log = logging.getLogger(__name__)

# Sweep preset: half the default resolution in x and t.  Transport
# coefficients agree with the default numerics to ~1e-4 at the headline point.
SWEEP_NUMERICS = NumericsConfig(dt=0.01, t_final=200.0)
SWEEP_GRID_POINTS = 2048
BATCH_SIZE = 8

CONFIGS = ("11", "10", "01")


def sweep_grid() -> Grid:
    return make_grid(256.0, SWEEP_GRID_POINTS)


@dataclass(frozen=True)
class ScatterJob:
    """One scattering run: soliton(s) of amplitude u, velocity v through ``wells``.

    With ``components == 1`` only the leading soliton at ``x0`` is simulated;
    with 2, the trailing one at ``x0 + delta`` is added and the two are
    coupled through ``g12``.
    """

    u: float
    v: float
    wells: PotentialConfig
    components: int = 1
    g12: float = 0.0
    x0: float = -30.0
    delta: float = -10.0
    g11: float = 1.0
    g22: float = 1.0

    def coupling(self) -> np.ndarray:
        if self.components == 1:
            return np.array([[self.g11]])
        return Couplings(self.g11, self.g22, self.g12).matrix()

    def initial_fields(self, grid: Grid) -> np.ndarray:
        centers = (self.x0, self.x0 + self.delta)[: self.components]
        return np.stack([soliton_field(SolitonSpec(self.u, self.v, c), grid) for c in centers])


def _jobs_for(params: GateParams, u: float, v: float) -> dict[str, ScatterJob]:
    """The three configurations tested at one (v, u) point."""
    g = params.couplings
    components = 1 if g.g12 == 0 else 2
    base = dict(
        u=float(u), v=float(v), components=components, g12=g.g12,
        x0=params.x0, delta=params.delta, g11=g.g11, g22=g.g22,
    )
    return {
        "11": ScatterJob(wells=params.wells_for((1, 1)), **base),
        "10": ScatterJob(wells=params.wells_for((1, 0)), **base),
        "01": ScatterJob(wells=params.wells_for((0, 1)), **base),
    }


def _propagate_jobs(jobs: Sequence[ScatterJob], numerics, grid, region):
    fields = np.stack([job.initial_fields(grid) for job in jobs])
    potentials = np.stack([potential_values(job.wells, grid) for job in jobs])
    norms = [[quadrature(np.abs(f) ** 2, grid) for f in row] for row in fields]
    out = propagate(fields, potentials, jobs[0].coupling(), grid, numerics.dt, numerics.t_final)
    density = out.real**2 + out.imag**2
    return [
        tuple(coefficients(density[b, c], norms[b][c], grid, region) for c in range(out.shape[1]))
        for b in range(len(jobs))
    ]


def _run_batch(task):
    jobs, numerics, grid, region = task
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", WrapAroundWarning)
            out = _propagate_jobs(jobs, numerics, grid, region)
        for w in caught:
            log.debug("batch starting with %s: %s", jobs[0], w.message)
        return out
    except NumericalBlowupError:
        if len(jobs) == 1:
            log.warning("numerical blowup for %s", jobs[0])
            return [None]
    # isolate the failing runs
    results = []
    for job in jobs:
        results.extend(_run_batch(([job], numerics, grid, region)))
    return results


def run_jobs(
    jobs: Iterable[ScatterJob],
    numerics: NumericsConfig | None = None,
    grid: Grid | None = None,
    region: AnalysisRegion | None = None,
    workers: int | None = 1,
    progress=None,
) -> dict[ScatterJob, Optional[tuple[Coefficients, ...]]]:
    """Run the unique jobs; a job that blew up maps to None."""
    numerics = numerics or SWEEP_NUMERICS
    grid = grid or sweep_grid()
    region = region or AnalysisRegion()
    region.check(grid)
    unique = list(dict.fromkeys(jobs))
    groups: dict[tuple, list[ScatterJob]] = {}
    for job in unique:
        groups.setdefault((job.components, job.coupling().tobytes()), []).append(job)
    batches = [
        group[i : i + BATCH_SIZE] for group in groups.values() for i in range(0, len(group), BATCH_SIZE)
    ]
    tasks = [(batch, numerics, grid, region) for batch in batches]
    log.info("running %d scattering simulations in %d batches", len(unique), len(batches))
    outputs = run_tasks(_run_batch, tasks, workers, progress=progress)
    return {job: res for batch, out in zip(batches, outputs) for job, res in zip(batch, out)}


def norm_drift(results: Iterable) -> float:
    """Largest |R + L + T - 1| over the given run results, i.e. |N(t_f)/N(0) - 1|."""
    drift = 0.0
    for res in results:
        if res is not None:
            drift = max(drift, max(abs(c.total - 1.0) for c in res))
    return drift


def _min_reflection(res) -> float:
    return math.nan if res is None else min(c.reflection for c in res)


def _min_transmission(res) -> float:
    return math.nan if res is None else min(c.transmission for c in res)


@dataclass
class VelocityScan:
    """R11, T10 and T01 against incident velocity at fixed amplitude.

    Missing points (solver failure) are NaN.
    """

    u: float
    v: np.ndarray
    r11: np.ndarray
    t10: np.ndarray
    t01: np.ndarray
    params: GateParams
    details: dict[str, list] = field(default_factory=dict, repr=False)

    @property
    def norm_drift(self) -> float:
        return norm_drift(r for runs in self.details.values() for r in runs)

    def valid(self) -> np.ndarray:
        return ~(np.isnan(self.r11) | np.isnan(self.t10) | np.isnan(self.t01))

    def passing(self, theta_r: float = 0.9, theta_t: float = 0.9) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            return (self.r11 > theta_r) & (self.t10 > theta_t) & (self.t01 > theta_t)


def _check_axis(values, name) -> np.ndarray:
    arr = np.asarray(list(values), dtype=float)
    if arr.size == 0:
        raise ConfigurationError(f"{name} must not be empty")
    if not np.all(np.isfinite(arr)):
        raise ConfigurationError(f"{name} must be finite")
    if arr.size > 1 and np.any(np.diff(arr) <= 0):
        raise ConfigurationError(f"{name} must be strictly increasing")
    return arr


def scan_velocity(
    params: GateParams | None,
    v_list,
    numerics: NumericsConfig | None = None,
    grid: Grid | None = None,
    region: AnalysisRegion | None = None,
    workers: int | None = 1,
    progress=None,
) -> VelocityScan:
    params = params or GateParams()
    v = _check_axis(v_list, "v_list")
    if np.any(v <= 0):
        raise ConfigurationError("velocities must be positive")
    per_v = [_jobs_for(params, params.u, vi) for vi in v]
    results = run_jobs(
        (job for jobs in per_v for job in jobs.values()), numerics, grid, region, workers, progress
    )
    details = {name: [results[jobs[name]] for jobs in per_v] for name in CONFIGS}
    return VelocityScan(
        u=params.u,
        v=v,
        r11=np.array([_min_reflection(r) for r in details["11"]]),
        t10=np.array([_min_transmission(r) for r in details["10"]]),
        t01=np.array([_min_transmission(r) for r in details["01"]]),
        params=params,
        details=details,
    )


def _margin(scan: VelocityScan, theta_r: float, theta_t: float) -> np.ndarray:
    return np.minimum.reduce([scan.r11 - theta_r, scan.t10 - theta_t, scan.t01 - theta_t])


def _edge(v, m, inside: int, outside: int) -> float:
    """Linear estimate of where the margin crosses zero between two samples."""
    if not (0 <= outside < v.size) or np.isnan(m[outside]):
        return float(v[inside])
    frac = m[inside] / (m[inside] - m[outside])
    return float(v[inside] + frac * (v[outside] - v[inside]))


def operational_window(
    scan: VelocityScan, theta_r: float = 0.9, theta_t: float = 0.9, interpolate: bool = False
) -> list[tuple[float, float]]:
    """Maximal runs of consecutive passing samples, as (first, last) velocities.

    With ``interpolate`` the edges are moved to the linear zero crossing of
    the worst threshold margin between the last passing and first failing
    sample.  Edges at the ends of the scan are left on the sample.
    """
    if scan.v.size == 0:
        raise ConfigurationError("scan is empty")
    ok = scan.passing(theta_r, theta_t)
    runs = []
    start = None
    for i, flag in enumerate(ok):
        if flag and start is None:
            start = i
        if not flag and start is not None:
            runs.append((start, i - 1))
            start = None
    if start is not None:
        runs.append((start, ok.size - 1))
    if not interpolate:
        return [(float(scan.v[a]), float(scan.v[b])) for a, b in runs]
    m = _margin(scan, theta_r, theta_t)
    return [(_edge(scan.v, m, a, a - 1), _edge(scan.v, m, b, b + 1)) for a, b in runs]


@dataclass
class RegionMap:
    """Operational mask over the (v, u) plane.

    Arrays are indexed ``[i_u, i_v]``: one row per amplitude.  ``valid`` is
    False where a simulation failed; such cells are also False in ``mask``.
    """

    v: np.ndarray
    u: np.ndarray
    mask: np.ndarray
    valid: np.ndarray
    r11: np.ndarray
    t10: np.ndarray
    t01: np.ndarray
    alpha: float
    g12: float
    theta_r: float
    theta_t: float
    norm_drift: float = 0.0

    @property
    def passing_cells(self) -> int:
        return int(np.count_nonzero(self.mask))

    @property
    def area(self) -> float:
        """Mask area in (v, u) units; unit cells when an axis has one sample."""
        dv = float(np.mean(np.diff(self.v))) if self.v.size > 1 else 1.0
        du = float(np.mean(np.diff(self.u))) if self.u.size > 1 else 1.0
        return self.passing_cells * dv * du

    def metadata(self) -> dict:
        return {
            "alpha": self.alpha,
            "g12": self.g12,
            "theta_r": self.theta_r,
            "theta_t": self.theta_t,
            "v": self.v.tolist(),
            "u": self.u.tolist(),
            "passing_cells": self.passing_cells,
            "invalid_cells": int(np.count_nonzero(~self.valid)),
            "norm_drift": self.norm_drift,
        }


def scan_planes(
    params: GateParams | None,
    v_list,
    u_list,
    alphas: Sequence[float],
    g12s: Sequence[float],
    numerics: NumericsConfig | None = None,
    grid: Grid | None = None,
    region: AnalysisRegion | None = None,
    workers: int | None = 1,
    progress=None,
) -> dict[tuple[float, float], RegionMap]:
    """Region maps for every (alpha, g12) pair, sharing identical runs between panels."""
    params = params or GateParams()
    v = _check_axis(v_list, "v_list")
    u = _check_axis(u_list, "u_list")
    if np.any(u <= 0):
        raise ConfigurationError("amplitudes must be positive")
    panels = []
    for alpha in alphas:
        for g12 in g12s:
            if not alpha > 0:
                raise ConfigurationError(f"alpha must be positive, got {alpha}")
            if g12 < 0:
                raise ConfigurationError(f"g12 must be non-negative, got {g12}")
            couplings = Couplings(params.couplings.g11, params.couplings.g22, float(g12))
            p = params.with_(alpha=float(alpha), couplings=couplings)
            grid_jobs = [[_jobs_for(p, ui, vi) for vi in v] for ui in u]
            panels.append(((float(alpha), float(g12)), p, grid_jobs))

    all_jobs = (
        job for _, _, gj in panels for row in gj for jobs in row for job in jobs.values()
    )
    results = run_jobs(all_jobs, numerics, grid, region, workers, progress)

    maps = {}
    for key, p, grid_jobs in panels:
        shape = (u.size, v.size)
        r11, t10, t01 = np.full(shape, np.nan), np.full(shape, np.nan), np.full(shape, np.nan)
        for i in range(u.size):
            for j in range(v.size):
                jobs = grid_jobs[i][j]
                r11[i, j] = _min_reflection(results[jobs["11"]])
                t10[i, j] = _min_transmission(results[jobs["10"]])
                t01[i, j] = _min_transmission(results[jobs["01"]])
        valid = ~(np.isnan(r11) | np.isnan(t10) | np.isnan(t01))
        with np.errstate(invalid="ignore"):
            mask = valid & (r11 > p.theta_r) & (t10 > p.theta_t) & (t01 > p.theta_t)
        drift = norm_drift(
            results[job] for row in grid_jobs for jobs in row for job in jobs.values()
        )
        maps[key] = RegionMap(
            v, u, mask, valid, r11, t10, t01, key[0], key[1], p.theta_r, p.theta_t, drift
        )
    return maps


def scan_plane(
    params: GateParams | None,
    v_list,
    u_list,
    alpha: float,
    g12: float,
    numerics: NumericsConfig | None = None,
    grid: Grid | None = None,
    region: AnalysisRegion | None = None,
    workers: int | None = 1,
    progress=None,
) -> RegionMap:
    maps = scan_planes(params, v_list, u_list, [alpha], [g12], numerics, grid, region, workers, progress)
    return maps[(float(alpha), float(g12))]


def critical_velocity(
    wells: PotentialConfig,
    u: float,
    numerics: NumericsConfig | None = None,
    grid: Grid | None = None,
    v_bracket: tuple[float, float] = (0.2, 1.0),
    tol: float = 1e-3,
    x0: float = -30.0,
    region: AnalysisRegion | None = None,
) -> float:
    """Smallest incident velocity with transmission >= 0.5, by bisection.

    The bracket must straddle the crossing: T(v_lo) < 0.5 <= T(v_hi).
    """
    lo, hi = map(float, v_bracket)
    if not 0 < lo < hi:
        raise ConfigurationError(f"invalid velocity bracket {v_bracket}")

    def transmission(v: float) -> float:
        job = ScatterJob(u=float(u), v=v, wells=wells, x0=x0)
        res = run_jobs([job], numerics, grid, region)[job]
        if res is None:
            raise NumericalBlowupError(math.nan)
        return res[0].transmission

    t_lo, t_hi = transmission(lo), transmission(hi)
    if not (t_lo < 0.5 <= t_hi):
        raise ConfigurationError(
            f"bracket does not straddle T=0.5: T({lo})={t_lo:.3f}, T({hi})={t_hi:.3f}"
        )
    while hi - lo >= tol:
        mid = 0.5 * (lo + hi)
        if transmission(mid) >= 0.5:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
