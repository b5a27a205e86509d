import pytest
from hypothesis import given
from hypothesis import strategies as st

from solitongate.errors import ConfigurationError
from solitongate.gate import (
    TRUTH_TABLE_ROWS,
    GateParams,
    build_scenario,
    meets_thresholds,
    parse_controls,
    run_gate,
    toffoli,
    verify_truth_table,
)
from solitongate.solver import NumericsConfig

COARSE = NumericsConfig(0.01, 200.0)


def test_toffoli_table():
    assert [toffoli(t, c) for t, c in TRUTH_TABLE_ROWS] == [0, 0, 0, 1, 1, 1, 1, 0]


def test_parse_controls():
    assert parse_controls("10") == (1, 0)
    assert parse_controls([0, 1]) == (0, 1)
    with pytest.raises(ConfigurationError):
        parse_controls("12")
    with pytest.raises(ConfigurationError):
        parse_controls("101")


def test_default_params_match_headline():
    p = GateParams()
    assert p.depth1 == pytest.approx(4.32, abs=1e-12) and p.depth2 == 4.0
    assert (p.u, p.v, p.x0, p.x0 + p.delta) == (1.4, 0.525, -30, -40)


@pytest.mark.parametrize(
    "changes",
    [{"x1": 10, "x2": -10}, {"theta_r": 0.5}, {"theta_t": 1.0}, {"x0": -5}, {"alpha": 0}],
)
def test_invalid_params(changes):
    with pytest.raises(ConfigurationError):
        GateParams(**changes)


def test_build_scenario_both_wells():
    sc = build_scenario("11", 0)
    first, second = sc.potential.wells
    assert (first.center, first.width, first.depth) == (-10, 0.5, pytest.approx(4.32))
    assert (second.center, second.width, second.depth) == (10, 0.5, 4.0)
    assert (sc.soliton1.center, sc.soliton2.center) == (-30, -40)
    assert sc.expected_target == 1


def test_build_scenario_no_wells():
    assert build_scenario("00", 0).potential.wells == ()


def test_build_scenario_target_one():
    sc = build_scenario("01", 1)
    assert [w.center for w in sc.potential.wells] == [10]
    assert (sc.soliton1.center, sc.soliton2.center) == (-40, -30)


@pytest.mark.parametrize("controls", ["00", "01", "10", "11"])
def test_well_count_matches_controls(controls):
    assert len(build_scenario(controls, 0).potential.wells) == sum(parse_controls(controls))


def test_headline_double_well_flips(grid):
    outcome = run_gate(build_scenario("11", 0), NumericsConfig(), grid)
    assert outcome.target_out == 1 and outcome.flipped
    assert outcome.passed
    assert outcome.quality == outcome.transport.min_reflection


def test_headline_first_well_only(grid):
    outcome = run_gate(build_scenario("10", 0), NumericsConfig(), grid)
    assert outcome.target_out == 0 and outcome.passed
    assert outcome.transport.min_transmission >= 0.97


@pytest.mark.parametrize("u, v", [(1.4, 0.525), (1.0, 0.45)])
def test_no_wells_preserves_target(coarse_grid, u, v):
    outcome = run_gate(build_scenario("00", 0, GateParams(u=u, v=v)), COARSE, coarse_grid)
    assert outcome.target_out == 0 and outcome.passed
    assert outcome.quality > 0.999


def test_component_swap_symmetry(coarse_grid):
    a = run_gate(build_scenario("10", 0), COARSE, coarse_grid)
    b = run_gate(build_scenario("10", 1), COARSE, coarse_grid)
    assert (a.target_out, b.target_out) == (0, 1)
    assert a.transport[0] == b.transport[1]
    assert a.transport[1] == b.transport[0]


@given(quality=st.floats(0, 1), lo=st.floats(0.51, 0.99), hi=st.floats(0.51, 0.99))
def test_pass_is_monotone_in_thresholds(quality, lo, hi):
    lo, hi = sorted((lo, hi))
    for controls in ((1, 1), (1, 0)):
        loose = meets_thresholds(controls, quality, GateParams(theta_r=lo, theta_t=lo))
        strict = meets_thresholds(controls, quality, GateParams(theta_r=hi, theta_t=hi))
        assert loose or not strict


def test_fast_solitons_break_only_the_double_well_rows(coarse_grid):
    # above the window the second well no longer reflects
    report = verify_truth_table(GateParams(v=1.0), NumericsConfig(0.01, 80.0), coarse_grid)
    for (target, controls), outcome in report.rows.items():
        if controls == (1, 1):
            assert not outcome.passed and outcome.target_out == target
        else:
            assert outcome.passed
    assert not report.passed


def test_slow_solitons_break_the_single_well_rows(coarse_grid):
    report = verify_truth_table(GateParams(v=0.3), COARSE, coarse_grid)
    for (target, controls), outcome in report.rows.items():
        if sum(controls) == 1:
            assert not outcome.passed
    assert report.rows[(0, (0, 0))].passed and report.rows[(1, (0, 0))].passed
    assert len(report.to_records()) == 8
