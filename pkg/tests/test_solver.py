import math

import numpy as np
import pytest
import scipy.fft as sfft
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from solitongate.errors import NumericalBlowupError, WrapAroundWarning
from solitongate.grid import make_grid, quadrature
from solitongate.model import (
    Couplings,
    PotentialConfig,
    PotentialWell,
    SolitonSpec,
    initial_state,
    potential_values,
    sech,
)
from solitongate.solver import NumericsConfig, State, evolve, propagate, step
from solitongate.sweep import ScatterJob, run_jobs


def exact_soliton(grid, u, v, x0, t):
    return u * sech(u * (grid.x - x0 - v * t)) * np.exp(1j * (v * (grid.x - x0) + (u * u - v * v) * t / 2))


def test_travelling_soliton_solves_the_free_equation():
    # i psi_t = -psi_xx / 2 - |psi|^2 psi, checked symbolically at sample points
    x, t = sp.symbols("x t", real=True)
    u, v, x0 = sp.Rational(7, 5), sp.Rational(21, 40), -3
    amp = u * sp.sech(u * (x - x0 - v * t))
    psi = amp * sp.exp(sp.I * (v * (x - x0) + (u**2 - v**2) * t / 2))
    residual = sp.I * sp.diff(psi, t) + sp.diff(psi, x, 2) / 2 + amp**2 * psi
    f = sp.lambdify((x, t), residual, "numpy")
    xs = np.linspace(-10, 5, 31)
    for tv in (0.0, 0.7, 3.1):
        assert np.abs(f(xs, tv)).max() < 1e-12


def free_run(grid, u, v, x0, t_final, dt):
    state = initial_state(SolitonSpec(u, v, x0), SolitonSpec(u, v, x0), grid)
    final, _ = evolve(state, np.zeros(grid.points), Couplings(), grid, NumericsConfig(dt, t_final))
    return final


def test_free_soliton_matches_exact_solution(grid):
    final = free_run(grid, 1.0, 0.5, -30, 5.0, 0.005)
    # Strang phase error at dt=0.005 grows by ~2.3e-6 per unit time for u=1
    assert np.abs(final.psi1 - exact_soliton(grid, 1.0, 0.5, -30, 5.0)).max() < 2e-5


def test_second_order_in_dt():
    g = make_grid(128, 2048)
    errors = []
    for dt in (0.01, 0.005, 0.0025):
        final = free_run(g, 1.0, 0.5, 0.0, 4.0, dt)
        errors.append(np.sqrt(quadrature(np.abs(final.psi1 - exact_soliton(g, 1.0, 0.5, 0.0, 4.0)) ** 2, g)))
    ratios = [errors[0] / errors[1], errors[1] / errors[2]]
    assert all(3.8 < r < 4.2 for r in ratios), ratios


def test_zero_field_stays_zero(grid):
    zero = State(np.zeros(grid.points), np.zeros(grid.points), 0.0)
    V = potential_values(PotentialConfig((PotentialWell(4, 0.5, 0),)), grid)
    out = step(zero, V, Couplings(g12=0.2), grid, 0.005)
    assert not np.any(out.psi1) and not np.any(out.psi2)


@pytest.mark.filterwarnings("ignore::solitongate.errors.WrapAroundWarning")
@settings(deadline=None, max_examples=25)
@given(
    seed=st.integers(0, 2**32 - 1),
    g12=st.floats(0, 1),
    dt=st.floats(1e-4, 0.05),
)
def test_step_conserves_each_norm(seed, g12, dt):
    g = make_grid(20, 128)
    rng = np.random.default_rng(seed)
    psi1 = rng.normal(size=128) + 1j * rng.normal(size=128)
    psi2 = rng.normal(size=128) + 1j * rng.normal(size=128)
    V = -3 * rng.random(128)
    out = step(State(psi1, psi2), V, Couplings(g12=g12), g, dt)
    for before, after in ((psi1, out.psi1), (psi2, out.psi2)):
        n0 = quadrature(np.abs(before) ** 2, g)
        assert abs(quadrature(np.abs(after) ** 2, g) / n0 - 1) < 1e-12


def test_step_advances_time(grid):
    state = initial_state(SolitonSpec(1, 0, 0), SolitonSpec(1, 0, 5), grid)
    assert step(state, np.zeros(grid.points), Couplings(), grid, 0.01).time == 0.01


def test_zero_final_time_is_identity(grid):
    state = initial_state(SolitonSpec(1.4, 0.5, -30), SolitonSpec(1.4, 0.5, -40), grid)
    final, snaps = evolve(state, np.zeros(grid.points), Couplings(), grid, NumericsConfig(0.005, 0.0))
    assert np.array_equal(final.psi1, state.psi1) and np.array_equal(final.psi2, state.psi2)
    assert final.time == 0.0 and snaps is None


def test_fused_evolution_matches_repeated_steps(grid):
    V = potential_values(PotentialConfig((PotentialWell(4.32, 0.5, -10),)), grid)
    state = initial_state(SolitonSpec(1.4, 0.525, -12), SolitonSpec(1.4, 0.525, -14), grid)
    couplings = Couplings(g12=0.2)
    fused, _ = evolve(state, V, couplings, grid, NumericsConfig(0.005, 0.5))
    stepped = state
    for _ in range(100):
        stepped = step(stepped, V, couplings, grid, 0.005)
    assert np.abs(fused.psi1 - stepped.psi1).max() < 1e-13
    assert np.abs(fused.psi2 - stepped.psi2).max() < 1e-13


def test_last_step_is_truncated(grid):
    state = initial_state(SolitonSpec(1, 0.5, 0), SolitonSpec(1, 0.5, 5), grid)
    numerics = NumericsConfig(0.3, 1.0)
    assert numerics.steps == 4
    final, _ = evolve(state, np.zeros(grid.points), Couplings(), grid, numerics)
    assert final.time == 1.0
    # three full steps plus one of 0.1 equals those same four explicit steps
    manual = state
    for h in (0.3, 0.3, 0.3, 0.1):
        manual = step(manual, np.zeros(grid.points), Couplings(), grid, h)
    assert np.abs(final.psi1 - manual.psi1).max() < 1e-13


def test_galilean_consistency(grid):
    t_final = 10.0
    for v in (20 * 2 * np.pi / grid.length, 0.5):
        rest = free_run(grid, 1.0, 0.0, 0.0, t_final, 0.005)
        shifted = sfft.ifft(sfft.fft(rest.psi1) * np.exp(-1j * grid.k * v * t_final))
        expected = shifted * np.exp(1j * (v * grid.x - v * v * t_final / 2))
        moving = free_run(grid, 1.0, v, 0.0, t_final, 0.005)
        assert np.abs(moving.psi1 - expected).max() < 1e-6


def test_time_reversal(grid):
    V = potential_values(PotentialConfig((PotentialWell(4.32, 0.5, -10), PotentialWell(4, 0.5, 10))), grid)
    state = initial_state(SolitonSpec(1.4, 0.525, -11), SolitonSpec(1.4, -0.3, 9), grid)
    couplings = Couplings(g12=0.3)
    forward = step(state, V, couplings, grid, 0.005)
    conj = State(forward.psi1.conj(), forward.psi2.conj())
    back = step(conj, V, couplings, grid, 0.005)
    assert np.abs(back.psi1.conj() - state.psi1).max() < 1e-10
    assert np.abs(back.psi2.conj() - state.psi2).max() < 1e-10


def test_blowup_is_reported(grid):
    psi = np.ones(grid.points, dtype=complex)
    psi[100] = np.nan
    with pytest.raises(NumericalBlowupError) as info:
        evolve(State(psi, psi), np.zeros(grid.points), Couplings(), grid, NumericsConfig(0.005, 0.02))
    assert info.value.time == pytest.approx(0.005)


def test_snapshots(grid):
    state = initial_state(SolitonSpec(1.4, 0.5, -30), SolitonSpec(1.4, 0.5, -40), grid)
    seen = []
    final, snaps = evolve(
        state, np.zeros(grid.points), Couplings(), grid,
        NumericsConfig(0.005, 1.0, snapshot_stride=50), observer=lambda t, d1, d2: seen.append(t),
    )
    assert [s.time for s in snaps] == pytest.approx([0.0, 0.25, 0.5, 0.75, 1.0])
    assert seen == [s.time for s in snaps]
    np.testing.assert_allclose(snaps[-1].density1, np.abs(final.psi1) ** 2, rtol=1e-12, atol=1e-300)
    np.testing.assert_allclose(snaps[0].density2, np.abs(state.psi2) ** 2)


def test_wraparound_diagnostic():
    g = make_grid(64, 512)
    state = initial_state(SolitonSpec(1.4, 2.0, 20), SolitonSpec(1.4, 2.0, 0), g)
    with pytest.warns(WrapAroundWarning):
        evolve(state, np.zeros(g.points), Couplings(), g, NumericsConfig(0.01, 8.0))


def test_batched_rows_match_single_runs(grid):
    V = potential_values(PotentialConfig((PotentialWell(4, 0.5, -10),)), grid)
    state = initial_state(SolitonSpec(1.4, 0.525, -12), SolitonSpec(1.2, 0.4, -14), grid)
    batch = np.stack([state.fields, 0.5 * state.fields, state.fields[::-1]])
    together = propagate(batch, V, Couplings().matrix(), grid, 0.005, 0.5)
    alone = propagate(batch[1:2], V, Couplings().matrix(), grid, 0.005, 0.5)
    single_component = propagate(batch[1:2, :1], V, np.eye(1), grid, 0.005, 0.5)
    assert np.array_equal(together[1], alone[0])
    assert np.array_equal(single_component[0, 0], alone[0, 0])


def test_transport_converges_at_second_order(coarse_grid):
    # Richardson check: halving dt shrinks the coefficient change about fourfold
    job = ScatterJob(1.4, 0.525, PotentialConfig((PotentialWell(4, 0.5, 10),)))
    values = [
        run_jobs([job], NumericsConfig(dt, 120.0), coarse_grid)[job][0].transmission
        for dt in (0.02, 0.01, 0.005)
    ]
    d1, d2 = abs(values[0] - values[1]), abs(values[1] - values[2])
    assert d2 < d1
    assert 3.0 < d1 / d2 < 5.0
