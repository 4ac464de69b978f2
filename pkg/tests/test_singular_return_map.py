import math
from dataclasses import replace

import numpy as np
import pytest

from models.errors import GeometryError, InadmissiblePointError
from models.friction_model import ReducedPoint
from models.singular_geometry import (CurveCrossing, PlanarCurve, a6_integral, canard_geometry,
                                      intersections_gamma_plus_image, theta_minus, theta_upsilon,
                                      y2_minus)
from models.singular_return_map import (
    CLOSURE_TOL, CycleClass, Itinerary, Jump, Mechanism, SingularCycle, SlowArc, R0_continuity_intervals,
    _canard_role, _cycle_from_crossing, canard_section_crossing, find_R0_fixed_points,
    pure_stick_interval, singular_cycle_from_fixed_point, singular_cycles_from_canard,
    singular_full_map_P0, singular_half_map_R0, stick_slip_interval,
)


@pytest.fixture
def slow_params(params):
    # xi below delta: no folded singularities, no jumps
    return params.with_(xi=0.5)


def test_R0_without_jump_points(slow_params):
    y2_out, itinerary = singular_half_map_R0(slow_params, 0.0, 0.2)
    assert -slow_params.delta < y2_out < slow_params.delta
    assert itinerary.jumps == []
    assert len(itinerary.arcs) == 1
    assert itinerary.end.theta == pytest.approx(math.pi, abs=1e-9)
    assert itinerary.end.y2 == pytest.approx(-y2_out)


def test_R0_rejects_points_off_the_attracting_sheet(slow_params):
    with pytest.raises(InadmissiblePointError):
        singular_half_map_R0(slow_params, 0.0, 0.7)


def test_R0_is_decreasing_and_contracting(slow_params):
    runs = R0_continuity_intervals(slow_params, 0.0, n_scan=41)
    assert len(runs) == 1
    y, r0 = runs[0][:, 0], runs[0][:, 1]
    slopes = np.diff(r0) / np.diff(y)
    assert np.all(slopes < 0)
    assert np.all(slopes > -1)


def test_full_map_is_half_map_twice(slow_params):
    once, _ = singular_half_map_R0(slow_params, 0.3, -0.1)
    twice, _ = singular_half_map_R0(slow_params, 0.3, once)
    assert singular_full_map_P0(slow_params, 0.3, -0.1) == pytest.approx(twice, abs=1e-14)


def test_unique_pure_stick_fixed_point(slow_params):
    fixed = find_R0_fixed_points(slow_params, 0.0, n_scan=41)
    assert len(fixed) == 1
    y2_star, slope = fixed[0]
    assert -1.0 < slope < 0.0
    assert singular_full_map_P0(slow_params, 0.0, y2_star) == pytest.approx(y2_star, abs=1e-7)

    cycle = singular_cycle_from_fixed_point(slow_params, 0.0, y2_star)
    assert cycle.classification is CycleClass.PURE_STICK
    assert cycle.closure_defect() < 1e-7
    assert cycle.theta_range == (0.0, math.pi)
    assert a6_integral(slow_params, cycle) < 0.0
    rows = cycle.to_rows()
    assert {label for label, *_ in rows} == {"half_1", "half_2"}


def test_canard_section_crossing_at_the_saddle_angle(params):
    assert canard_section_crossing(params, theta_minus(params)) == -params.delta


def test_intervals_start_at_lower_fold(params):
    lo, hi = stick_slip_interval(params, 0.0)
    assert lo == -params.delta
    assert hi <= params.delta
    lo, hi = pure_stick_interval(params.with_(xi=0.5))
    assert (lo, hi) == (-params.delta, params.delta)


def _arc(y2, theta):
    return SlowArc(PlanarCurve(np.array(y2), np.array(theta), "slow_arc"))


def test_classification_by_mechanism():
    arc = _arc([0.1, 0.2], [0.0, math.pi])
    stick = SingularCycle(half=Itinerary([arc], 0.0, math.pi), slow_arcs=[arc.curve],
                          theta_range=(0.0, math.pi), jump_angles=[])
    assert stick.classification is CycleClass.PURE_STICK

    jump = Jump(ReducedPoint(-0.6, 0.5), ReducedPoint(0.3, 0.5), Mechanism.G_MINUS)
    slip = SingularCycle(half=Itinerary([arc, jump], 0.0, math.pi), slow_arcs=[arc.curve],
                         theta_range=(0.0, math.pi), jump_angles=[0.5])
    assert slip.classification is CycleClass.STICK_SLIP

    canard = SlowArc(arc.curve, canard=True)
    via_L = Jump(ReducedPoint(-0.9, 0.5), ReducedPoint(-0.4, 0.5), Mechanism.L_MINUS)
    pure_canard = SingularCycle(half=Itinerary([canard, via_L], 0.0, math.pi), slow_arcs=[arc.curve],
                                theta_range=(0.0, math.pi), jump_angles=[0.5])
    assert pure_canard.classification is CycleClass.CANARD_L


def test_jump_symmetry_mirrors_mechanism():
    jump = Jump(ReducedPoint(-0.6, 0.5), ReducedPoint(0.3, 0.5), Mechanism.G_MINUS)
    mirrored = jump.symmetric()
    assert mirrored.mechanism is Mechanism.G_PLUS
    assert mirrored.source == ReducedPoint(0.6, 0.5 + math.pi)
    assert Mechanism.L_PLUS.mirrored is Mechanism.L_MINUS
    assert Mechanism.L_PLUS.route == "L"


def test_two_canard_cycles_between_tangency_and_period_doubling(params):
    p = params.with_(xi=0.795)
    cycles = [c for c in singular_cycles_from_canard(p) if c.crossing.mechanism == "G"]
    assert [c.canard_role for c in cycles] == ["ssc", "c"]
    assert cycles[0].classification is CycleClass.STICK_SLIP_CANARD
    assert cycles[1].classification is CycleClass.CANARD_G
    assert cycles[0].jump_angle < cycles[1].jump_angle
    assert [c.crossing.upward for c in cycles] == [True, False]
    for cycle in cycles:
        assert cycle.closure_defect() < CLOSURE_TOL
        assert cycle.half.start.y2 == pytest.approx(-cycle.half.end.y2, abs=CLOSURE_TOL)
        jump = cycle.half.jumps[0]
        assert jump.mechanism is Mechanism.G_MINUS
        assert -p.delta < jump.target.y2 < p.delta
        assert cycle.to_dict()["canard_role"] == cycle.canard_role


def test_canard_role_follows_crossing_direction():
    point = ReducedPoint(0.1, 2.0)
    source = ReducedPoint(-0.8, 2.0)
    up = CurveCrossing(point, 0.3, True, "G", 1.0, source, upward=True)
    assert _canard_role(up) == "ssc"
    assert _canard_role(replace(up, upward=False)) == "c"
    assert _canard_role(replace(up, mechanism="L")) == "c"


def test_canard_cycle_off_the_crossing_does_not_close(params):
    p = params.with_(xi=0.795)
    geometry = canard_geometry(p)
    crossing = next(c for c in intersections_gamma_plus_image(p, geometry)
                    if c.transverse and c.mechanism == "G")
    assert _cycle_from_crossing(p, geometry, crossing).closure_defect() < CLOSURE_TOL
    moved = replace(crossing, point=ReducedPoint(crossing.point.y2, crossing.point.theta + 0.05))
    with pytest.raises(GeometryError, match="does not close"):
        _cycle_from_crossing(p, geometry, moved)


@pytest.mark.slow
def test_stick_slip_fixed_point_at_section_upsilon(params):
    p = params.with_(xi=0.9397)
    theta_star = theta_upsilon(p)
    interval = stick_slip_interval(p, theta_star)
    fixed = find_R0_fixed_points(p, theta_star, search_interval=interval)
    assert len(fixed) == 1
    assert -1.0 < fixed[0].slope < 0.0
    _, itinerary = singular_half_map_R0(p, theta_star, fixed[0].y2)
    assert [j.mechanism for j in itinerary.jumps] == [Mechanism.G_MINUS]
    assert itinerary.jumps[0].target.y2 == pytest.approx(y2_minus(p), abs=1e-10)


@pytest.mark.slow
@pytest.mark.parametrize("xi", [0.65, 0.7, 0.75])
def test_pure_stick_fixed_point_below_tangency(params, xi):
    p = params.with_(xi=xi)
    theta_star = theta_minus(p)
    fixed = find_R0_fixed_points(p, theta_star, search_interval=pure_stick_interval(p, theta_star))
    assert len(fixed) == 1
    cycle = singular_cycle_from_fixed_point(p, theta_star, fixed[0].y2)
    assert cycle.classification is CycleClass.PURE_STICK
