import math

import numpy as np
import pytest

from commands.cycles import BRANCH_HEADER, limit_cycles, singular_cycles
from models.errors import ModelParamsError
from models.friction_model import ModelParams, PhaseState, ReducedPoint, manifold_x
from models.singular_return_map import find_R0_fixed_points, singular_cycle_from_fixed_point
from models.stroboscopic_analysis import (
    CycleType, EventKind, SimulationResult, classify_cycle, continue_branch, count_plateaus,
    count_slip_excursions, find_limit_cycle, full_map_P_eps, half_map_R_eps, half_map_convergence,
    horseshoe_evidence, orbit_distance, phase_tags, seed_on_manifold, seeds_from_singular_cycles, simulate,
    slips_per_period, symmetry_defect,
)


@pytest.fixture
def pure_stick_seed(strobe_params):
    (fixed,) = find_R0_fixed_points(strobe_params, 0.0, n_scan=21)
    return fixed.y2


def test_maps_require_positive_eps(params):
    with pytest.raises(ModelParamsError):
        half_map_R_eps(params.with_(eps=0.0), 0.0, [0.0, 0.0])


def test_seed_on_manifold(params):
    x, y2 = seed_on_manifold(params, 0.4, 0.1)
    assert y2 == 0.1
    assert x == manifold_x(params, ReducedPoint(0.1, 0.4))


def test_pure_stick_limit_cycle(strobe_params, pure_stick_seed):
    cycle = find_limit_cycle(strobe_params, 0.0, seed_on_manifold(strobe_params, 0.0, pure_stick_seed))
    assert cycle.residual <= 1e-9
    assert cycle.is_attracting
    assert cycle.classification is CycleType.PURE_STICK
    assert cycle.max_y < math.sqrt(strobe_params.eps)
    assert abs(cycle.y2 - pure_stick_seed) < 0.1
    assert symmetry_defect(cycle) < 1e-3
    assert np.allclose(np.sort(np.abs(cycle.P_multipliers)), np.sort(np.abs(cycle.multipliers) ** 2),
                       atol=1e-10)
    summary = cycle.summary()
    assert list(summary) == BRANCH_HEADER
    assert summary["class"] == "pure-stick"


def test_full_map_is_half_map_twice_and_fixes_the_cycle(strobe_params):
    v = seed_on_manifold(strobe_params, 0.0, 0.1)
    once = half_map_R_eps(strobe_params, 0.0, v)
    assert np.allclose(full_map_P_eps(strobe_params, 0.0, v), half_map_R_eps(strobe_params, 0.0, once),
                       rtol=0, atol=1e-12)
    # P fixes the pure-stick cycle through the fixed point of R
    (fixed,) = find_R0_fixed_points(strobe_params, 0.0, n_scan=21)
    cycle = find_limit_cycle(strobe_params, 0.0, seed_on_manifold(strobe_params, 0.0, fixed.y2))
    assert np.max(np.abs(full_map_P_eps(strobe_params, 0.0, cycle.point) - cycle.point)) < 1e-8


def test_P_multipliers_from_finite_differences_are_squares(strobe_params, pure_stick_seed):
    cycle = find_limit_cycle(strobe_params, 0.0, seed_on_manifold(strobe_params, 0.0, pure_stick_seed),
                             P_from_fd=True, tols=(1e-11, 1e-13))
    assert np.allclose(np.sort(np.abs(cycle.P_multipliers)), np.sort(np.abs(cycle.multipliers) ** 2),
                       atol=1e-4)


def test_singular_cycle_seeds_the_section(strobe_params, pure_stick_seed):
    cycle = singular_cycle_from_fixed_point(strobe_params, 0.0, pure_stick_seed)
    seeds = seeds_from_singular_cycles(strobe_params, 0.0, [cycle])
    assert seeds == [pytest.approx(pure_stick_seed, abs=1e-9)]


def test_half_map_approaches_R0_as_eps_shrinks(strobe_params):
    rows = half_map_convergence(strobe_params, 0.0, [-0.2, 0.2], [0.04, 0.02])
    assert [r["eps"] for r in rows] == [0.04, 0.02]
    assert rows[1]["sup_error"] < rows[0]["sup_error"]


def test_short_natural_continuation(strobe_params, pure_stick_seed):
    seed = seed_on_manifold(strobe_params, 0.0, pure_stick_seed)
    diagram = continue_branch(strobe_params, 0.0, (0.5, 0.53), seed, step=0.015, max_step=0.015)
    assert diagram.status == "completed"
    assert diagram.branch[0].xi == 0.5
    assert len(diagram.branch) >= 3
    assert all(b.xi > a.xi for a, b in zip(diagram.branch, diagram.branch[1:]))
    assert all(p.classification is CycleType.PURE_STICK for p in diagram.branch)
    assert diagram.events_of(EventKind.PERIOD_DOUBLING) == []
    assert [list(row) for row in diagram.to_rows()][0] == BRANCH_HEADER


def _trajectory(y2, y, theta):
    return {"y2": np.asarray(y2, dtype=float), "y": np.asarray(y, dtype=float),
            "theta": np.asarray(theta, dtype=float)}


def test_classify_cycle_on_synthetic_orbits(params):
    p = params.with_(eps=0.01)
    theta = np.linspace(0.0, 2 * math.pi, 200)
    quiet = np.full(200, 0.001)
    assert classify_cycle(p, _trajectory(np.full(200, 0.2), quiet, theta)) is CycleType.PURE_STICK
    loud = quiet.copy()
    loud[50:60] = 0.5
    assert classify_cycle(p, _trajectory(np.full(200, 0.2), loud, theta)) is CycleType.STICK_SLIP
    creeping = np.full(200, 0.2)
    creeping[20:40] = 0.7
    assert classify_cycle(p, _trajectory(creeping, quiet, theta)) is CycleType.CANARD
    assert classify_cycle(p, _trajectory(creeping, quiet, theta), threshold=1e-4) is CycleType.STICK_SLIP


def test_phase_tags():
    tags = phase_tags(np.array([0.0, 0.2, -0.2, 0.05]), 0.1)
    assert list(tags) == ["stick", "slip+", "slip-", "stick"]


def _result(y, threshold=0.1):
    t = np.arange(len(y), dtype=float)
    y = np.asarray(y, dtype=float)
    zeros = np.zeros_like(y)
    return SimulationResult(t=t, x=zeros, y=y, theta=zeros, tags=phase_tags(y, threshold), threshold=threshold)


def test_count_slip_excursions():
    result = _result([0.0, 0.5, 0.5, 0.0, -0.5, 0.0, 0.0, 0.3])
    assert count_slip_excursions(result) == 3
    assert count_slip_excursions(result, t_from=2.0, t_to=5.0) == 2
    assert count_slip_excursions(result, t_from=100.0) == 0
    rows = result.rows()
    assert rows[1] == (1.0, 0.0, 0.5, 0.0, "slip+")


def test_slips_per_period_averages_windows():
    params = ModelParams(0.6, 1.1, 0.4, xi=1.0, eps=2 * math.pi / 10)
    # forcing period 10 samples; one slip in each of the last two periods
    y = np.zeros(31)
    y[13] = y[24] = 1.0
    result = _result(y)
    assert slips_per_period(result, params, periods=2) == 1.0


def test_count_plateaus():
    assert count_plateaus([1, 1, 2, 2, 2, 3]) == 3
    assert count_plateaus([4, 4, 4]) == 1
    assert count_plateaus([]) == 0


def test_orbit_distance():
    s = np.linspace(0.0, 2 * math.pi, 400)
    a = {"x": np.cos(s), "y": np.sin(s)}
    b = {"x": np.cos(s) + 0.25, "y": np.sin(s)}
    assert orbit_distance(a, a) == 0.0
    assert orbit_distance(a, b) == pytest.approx(0.25, abs=0.02)
    assert orbit_distance(a, b) == pytest.approx(orbit_distance(b, a))


def test_simulate_tags_and_grid(params):
    p = params.with_(xi=0.5, eps=0.05)
    result = simulate(p, PhaseState(0.0, 0.0, 0.0), (0.0, 20.0), dt_out=0.5)
    assert result.t[0] == 0.0
    assert result.t[-1] == pytest.approx(20.0)
    assert len(result.t) == 41
    assert result.threshold == pytest.approx(math.sqrt(0.05))
    assert set(result.tags) <= {"stick", "slip+", "slip-"}
    assert np.allclose(result.theta, p.omega * result.t, atol=1e-8)


@pytest.mark.slow
def test_fold_and_period_doubling_at_eps_one_hundredth(params):
    p = params.with_(xi=0.95, eps=0.01)
    diagram = continue_branch(p, 0.0, (0.95, 0.75), seed_on_manifold(p, 0.0, 0.0), step=0.005)
    folds = [e.xi for e in diagram.events_of(EventKind.FOLD)]
    doublings = [e.xi for e in diagram.events_of(EventKind.PERIOD_DOUBLING)]
    assert any(abs(xi - 0.7805) < 2e-3 for xi in folds)
    assert any(abs(xi - 0.8731) < 3e-3 for xi in doublings)


@pytest.mark.slow
@pytest.mark.parametrize("xi, slips", [(0.9, 6), (0.61, 2)])
def test_multi_slip_regime(xi, slips):
    p = ModelParams(0.6, 0.3, 0.11, xi=xi, eps=0.01)
    period = 2 * math.pi / p.omega
    result = simulate(p, PhaseState(0.0, 0.0, 0.0), (0.0, 6 * period))
    assert slips_per_period(result, p, periods=2) == slips


def _first_events(p):
    diagram = continue_branch(p, 0.0, (0.95, 0.75), seed_on_manifold(p, 0.0, 0.0), step=0.005)
    folds = [e.xi for e in diagram.events_of(EventKind.FOLD)]
    doublings = [e.xi for e in diagram.events_of(EventKind.PERIOD_DOUBLING)]
    return folds[0], doublings[0]


@pytest.mark.slow
def test_fold_and_period_doubling_at_eps_five_thousandths(params):
    fold, doubling = _first_events(params.with_(xi=0.95, eps=0.005))
    assert fold == pytest.approx(0.7820, abs=2e-3)
    assert doubling == pytest.approx(0.8096, abs=3e-3)


@pytest.mark.slow
def test_bifurcations_approach_singular_thresholds_as_eps_shrinks(params):
    xi_t, xi_pd = 0.7835, 0.8179
    events = [_first_events(params.with_(xi=0.95, eps=eps)) for eps in (0.02, 0.01, 0.005)]
    fold_gaps = [abs(fold - xi_t) for fold, _ in events]
    pd_gaps = [abs(doubling - xi_pd) for _, doubling in events]
    assert fold_gaps[0] > fold_gaps[1] > fold_gaps[2]
    assert pd_gaps[0] > pd_gaps[1] > pd_gaps[2]


@pytest.mark.slow
def test_three_coexisting_cycles(params):
    p = params.with_(xi=0.9397, eps=0.01)
    seeds = seeds_from_singular_cycles(p, 0.0, singular_cycles(p, 0.0))
    found = limit_cycles(p, 0.0, seeds, tols=(1e-9, 1e-11), tol=1e-9)
    assert len(found) >= 3
    kinds = {c.classification for c in found}
    assert {CycleType.PURE_STICK, CycleType.STICK_SLIP, CycleType.CANARD} <= kinds
    for cycle in found:
        if cycle.classification in (CycleType.PURE_STICK, CycleType.STICK_SLIP):
            assert cycle.is_attracting


@pytest.mark.slow
def test_half_map_convergence_at_five_points(strobe_params):
    points = [-0.3, -0.15, 0.0, 0.15, 0.3]
    eps_values = [0.04, 0.02, 0.01, 0.005]
    rows = half_map_convergence(strobe_params, 0.0, points, eps_values)
    assert [r["eps"] for r in rows] == eps_values
    assert all(len(r["errors"]) == 5 for r in rows)
    sup = [r["sup_error"] for r in rows]
    assert all(a > b for a, b in zip(sup, sup[1:]))


@pytest.mark.slow
def test_horseshoe_evidence_between_tangency_and_period_doubling(params):
    report = horseshoe_evidence(params.with_(eps=0.01), xi=0.795)
    items = report.items
    assert items["intersections"].ok
    assert items["intersections"].value["count"] == 2
    a6 = items["a6_integral"]
    assert a6.ok
    assert math.isfinite(a6.value["value"])
    assert a6.value["negative"] == (a6.value["value"] < 0)
    assert a6.value["theta_1"] < a6.value["theta_2"]
    period_one = items["period_one"]
    assert period_one.ok
    assert len(period_one.value) >= 2
    assert any(max(c["abs_multipliers"]) > 1.0 for c in period_one.value)
    counts = items["escape_time"].value["plateau_counts"]
    assert len(counts) == 3
    assert counts[0] < counts[1] < counts[2]
    assert items["period_two"].ok
    assert report.to_dict()["theta_star"] == report.theta_star
