import math

import numpy as np
import pytest

from models.errors import (BracketError, CanardMissesSectionError, FoldedSingularityFoldError,
                           InadmissiblePointError)
from models.friction_model import ModelParams, ReducedPoint, apply_symmetry, reduced_desing_field
from models.singular_geometry import (
    SEED_DEFECT_TOL, Side, SingularityKind, ThetaInterval, _count_G, canard_image_curves, compute_canard,
    compute_faux_canard, discriminant_at, find_xi_pd, find_xi_t, folded_saddle, folded_singularities,
    gamma_plus_meets_jump_image_at_infinity, hamiltonian, intersections_gamma_plus_image, jump_image_curve,
    jump_set_J, map_G, map_L, polyline_crossings, seed_defect, theta_minus, theta_plus, theta_upsilon,
    theta_upsilon_sweep, upsilon_arc, wrap_angle, xi_dn, y2_minus,
)


def test_theta_minus_and_plus_at_xi_twice_delta(params):
    p = params.with_(xi=1.2)
    assert theta_minus(p) == pytest.approx(math.pi / 3, abs=1e-14)
    assert theta_plus(p) == pytest.approx(2 * math.pi / 3, abs=1e-14)


def test_wrap_angle():
    assert wrap_angle(1.5 * math.pi) == pytest.approx(-0.5 * math.pi)
    assert wrap_angle(math.pi) == pytest.approx(math.pi)
    assert wrap_angle(-math.pi) == pytest.approx(math.pi)
    assert wrap_angle(0.25 + 4 * math.pi) == pytest.approx(0.25)


def test_theta_interval_contains_mod_two_pi():
    arc = ThetaInterval(-1.0, 1.0)
    assert arc.contains(0.5 + 2 * math.pi)
    assert not arc.contains(1.0)
    assert not arc.contains(math.pi)
    assert not ThetaInterval(0.3, 0.3).contains(0.3)
    assert arc.symmetric().contains(math.pi)


def test_jump_sets(params):
    p = params.with_(xi=1.2)
    j_minus = jump_set_J(p, Side.MINUS)
    assert (j_minus.lo, j_minus.hi) == pytest.approx((-math.pi / 3, math.pi / 3))
    j_plus = jump_set_J(p, Side.PLUS)
    assert (j_plus.lo, j_plus.hi) == pytest.approx((2 * math.pi / 3, 4 * math.pi / 3))
    narrow = jump_set_J(params.with_(xi=0.6 + 1e-10), Side.MINUS)
    assert narrow.length < 1e-4


def test_folded_singularities_locations_and_kinds(params):
    p = params.with_(xi=1.2)
    singularities = folded_singularities(p)
    locations = [(fs.location.y2, fs.location.theta) for fs in singularities]
    expected = [(-0.6, math.pi / 3), (-0.6, 5 * math.pi / 3), (0.6, 2 * math.pi / 3), (0.6, 4 * math.pi / 3)]
    for got, want in zip(locations, expected):
        assert got == pytest.approx(want, abs=1e-12)
    assert [fs.is_saddle for fs in singularities] == [True, False, False, True]
    for fs in singularities:
        field = reduced_desing_field(p, fs.location)
        assert abs(field[0]) < 1e-12
        assert abs(field[1]) < 1e-12


def test_saddles_are_symmetric_images(params):
    z_minus = folded_saddle(params, Side.MINUS)
    z_plus = folded_saddle(params, Side.PLUS)
    mirrored = apply_symmetry(z_minus)
    assert mirrored.y2 == z_plus.y2
    assert wrap_angle(mirrored.theta - z_plus.theta) == pytest.approx(0.0, abs=1e-14)


def test_reference_xi_has_two_saddles_and_two_foci(params):
    kinds = [fs.kind for fs in folded_singularities(params.with_(xi=0.9397))]
    assert kinds.count(SingularityKind.SADDLE) == 2
    assert kinds.count(SingularityKind.FOCUS) == 2


@pytest.mark.parametrize("xi", [0.5, 0.6])
def test_no_folded_singularities_below_delta(params, xi):
    with pytest.raises(FoldedSingularityFoldError):
        folded_singularities(params.with_(xi=xi))


def test_xi_dn_lies_between_delta_and_twice_delta(params):
    value = xi_dn(params)
    assert 0.6 < value < 1.2
    assert abs(discriminant_at(params, value)) < 1e-6
    assert discriminant_at(params, 0.6 * (1 + 1e-9)) > 0
    assert discriminant_at(params, 50.0) < 0
    with pytest.raises(BracketError):
        xi_dn(params, bracket=(0.5, 1.0))


def test_y2_minus(params, phi):
    value = y2_minus(params)
    assert float(phi(value)) == pytest.approx(params.mu - 2.0, abs=1e-10)
    assert 0.0 < value < params.delta
    assert y2_minus(params.with_(mu_s=0.8)) == pytest.approx(0.0, abs=1e-12)


def test_map_G_from_fold_lands_on_y2_minus(params):
    for theta in (-0.4, 0.0, 0.7):
        image = map_G(params, Side.MINUS, ReducedPoint(-params.delta, theta))
        assert image.y2 == pytest.approx(y2_minus(params), abs=1e-10)
        assert image.theta == theta


def test_map_G_image_and_x_identity(params):
    rng = np.random.default_rng(3)
    for y2, theta in zip(rng.uniform(-4.0, -0.6, 12), rng.uniform(-math.pi, math.pi, 12)):
        source = ReducedPoint(float(y2), float(theta))
        image = map_G(params, Side.MINUS, source)
        assert -params.delta < image.y2 < params.delta
        x0 = -math.sin(theta) - params.mu_d * float(params.regularization(y2))
        x1 = -math.sin(theta) - params.mu_d * float(params.regularization(image.y2))
        assert x1 == pytest.approx(2 * params.mu_d - 2 * math.sin(theta) - x0, abs=1e-10)
    with pytest.raises(InadmissiblePointError):
        map_G(params, Side.MINUS, ReducedPoint(0.0, 0.0))


def test_map_G_plus_is_conjugate(params):
    source = ReducedPoint(1.3, 2.0)
    image = map_G(params, Side.PLUS, source)
    mirrored = map_G(params, Side.MINUS, ReducedPoint(-1.3, 2.0))
    assert image.y2 == pytest.approx(-mirrored.y2)


def test_map_L(params, phi):
    image = map_L(params, Side.MINUS, ReducedPoint(-2.0, 0.3))
    assert float(phi(image.y2)) == pytest.approx(float(phi(-2.0)), abs=1e-12)
    assert -params.delta < image.y2 < 0.0
    near_fold = map_L(params, Side.MINUS, ReducedPoint(-params.delta - 1e-7, 0.3))
    assert near_fold.y2 == pytest.approx(-params.delta, abs=1e-3)
    assert map_L(params, Side.MINUS, ReducedPoint(-params.delta, 0.3), allow_fold=True).y2 == -params.delta
    with pytest.raises(InadmissiblePointError):
        map_L(params, Side.MINUS, ReducedPoint(-0.2, 0.3))


def test_canard_starts_at_saddle_and_tilde_stays_on_repelling_sheet(params):
    gamma, gamma_tilde = compute_canard(params)
    z = folded_saddle(params)
    assert (gamma.start.y2, gamma.start.theta) == (z.y2, z.theta)
    assert np.all(np.abs(gamma.y2[1:-1]) < params.delta)
    assert np.all(gamma_tilde.y2[1:] < -params.delta)
    assert gamma_tilde.meta["termination"] == "floor"
    assert gamma_tilde.end.y2 == pytest.approx(-10 * params.delta, abs=1e-8)


def test_plus_canard_is_symmetric_image(params):
    gamma, tilde = compute_canard(params, Side.MINUS)
    gamma_plus, tilde_plus = compute_canard(params, Side.PLUS)
    assert np.array_equal(gamma_plus.y2, -gamma.y2)
    assert np.allclose(gamma_plus.theta, gamma.theta + math.pi)
    assert gamma_plus.provenance == "gamma_plus"
    assert tilde_plus.provenance == "gamma_plus_tilde"


def test_canard_image_curves_stay_on_attracting_sheet(params):
    _, tilde = compute_canard(params)
    g_image, l_image = canard_image_curves(params, tilde)
    assert np.all(np.abs(g_image.y2) < params.delta)
    assert np.all(np.abs(l_image.y2) <= params.delta)
    # first node of gamma_tilde is the folded saddle on F-
    assert g_image.y2[0] == pytest.approx(y2_minus(params), abs=1e-10)
    assert np.array_equal(g_image.theta, tilde.theta)


def test_hamiltonian_values(params):
    assert hamiltonian(params, ReducedPoint(0.0, 0.0)) == 0.0
    z = folded_saddle(params)
    assert hamiltonian(params, z) == pytest.approx(-params.mu_s + math.sin(theta_minus(params)), abs=1e-12)


def test_canard_conserves_hamiltonian_at_infinite_xi(params):
    p = ModelParams(params.delta, params.mu_s, params.mu_d, math.inf)
    gamma, _ = compute_canard(p)
    energy = np.array([hamiltonian(p, q) for q in gamma.points()])
    assert np.max(np.abs(energy - energy[0])) < 1e-8


def test_gamma_plus_reaches_jump_image_in_hamiltonian_limit(params):
    assert gamma_plus_meets_jump_image_at_infinity(params)
    assert not gamma_plus_meets_jump_image_at_infinity(params.with_(mu_s=1.2, mu_d=1.05))


def test_upsilon_arc_is_centred_on_zero(params):
    arc = upsilon_arc(params)
    assert arc.lo == pytest.approx(-arc.hi)
    assert arc.contains(0.0)


def test_theta_upsilon_misses_section_in_multi_slip_regime():
    p = ModelParams(0.6, 0.3, 0.11, xi=0.9)
    with pytest.raises(CanardMissesSectionError):
        theta_upsilon(p)


def test_polyline_crossings_of_two_segments():
    found = polyline_crossings(np.array([0.0, 1.0]), np.array([0.0, 1.0]),
                               np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    assert len(found) == 1
    i, t, j, u, sin_angle = found[0]
    assert (i, j) == (0, 0)
    assert t == pytest.approx(0.5)
    assert u == pytest.approx(0.5)
    assert sin_angle == pytest.approx(1.0)
    assert polyline_crossings(np.array([0.0, 1.0]), np.array([0.0, 1.0]),
                              np.array([2.0, 3.0]), np.array([0.0, 1.0])) == []


def test_two_transverse_G_crossings_between_tangency_and_period_doubling(params):
    crossings = [c for c in intersections_gamma_plus_image(params.with_(xi=0.795))
                 if c.mechanism == "G" and c.transverse]
    assert len(crossings) == 2
    assert crossings[0].point.theta < crossings[1].point.theta


@pytest.mark.slow
def test_period_doubling_threshold(params):
    value = find_xi_pd(params)
    assert value == pytest.approx(0.8179, abs=1e-3)
    at = params.with_(xi=value)
    assert theta_upsilon(at) == pytest.approx(theta_minus(at), abs=1e-4)


@pytest.mark.slow
def test_tangency_threshold_below_period_doubling(params):
    xi_t = find_xi_t(params)
    assert xi_t == pytest.approx(0.7835, abs=2e-3)
    below, _, _ = _count_G(params.with_(xi=xi_t - 1e-3))
    above, _, _ = _count_G(params.with_(xi=xi_t + 1e-3))
    assert (below, above) == (0, 2)
    assert xi_t < find_xi_pd(params)


@pytest.mark.slow
def test_theta_upsilon_decreases_with_xi(params):
    values = [theta_upsilon(params.with_(xi=xi)) for xi in (0.80, 0.85, 0.90, 0.95)]
    assert all(a > b for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("xi", [0.61, 0.7, 0.795, 0.9397, 1.2, 3.0, 25.0])
def test_four_folded_singularities_two_of_them_saddles(params, xi):
    singularities = folded_singularities(params.with_(xi=xi))
    assert len(singularities) == 4
    assert sum(fs.is_saddle for fs in singularities) == 2
    saddles = [fs.location for fs in singularities if fs.is_saddle]
    assert saddles[0].y2 == -saddles[1].y2


def test_reduced_field_commutes_with_symmetry(params):
    rng = np.random.default_rng(11)
    for y2, theta in zip(rng.uniform(-3.0, 3.0, 20), rng.uniform(-math.pi, math.pi, 20)):
        q = ReducedPoint(float(y2), float(theta))
        f = reduced_desing_field(params, q)
        g = reduced_desing_field(params, apply_symmetry(q))
        assert g[0] == pytest.approx(-f[0], abs=1e-10)
        assert g[1] == pytest.approx(f[1], abs=1e-10)


def test_symmetric_curves_match_to_round_off(params):
    gamma, tilde = compute_canard(params, Side.MINUS)
    gamma_plus, tilde_plus = compute_canard(params, Side.PLUS)
    for minus, plus in ((gamma, gamma_plus), (tilde, tilde_plus)):
        mirrored = [apply_symmetry(q) for q in minus.points()]
        for q, r in zip(mirrored, plus.points()):
            assert q.y2 == pytest.approx(r.y2, abs=1e-10)
            assert wrap_angle(q.theta - r.theta) == pytest.approx(0.0, abs=1e-10)
    j_minus = jump_image_curve(params, Side.MINUS)
    j_plus = jump_image_curve(params, Side.PLUS)
    assert np.allclose(j_plus.y2, -j_minus.y2, atol=1e-10)
    assert np.allclose(j_plus.theta, j_minus.theta + math.pi, atol=1e-10)


def test_canard_does_not_depend_on_the_seed_offset(params):
    assert seed_defect(params) < SEED_DEFECT_TOL
    gamma, _ = compute_canard(params, check_seed=True)
    assert gamma.meta["seed_defect"] < SEED_DEFECT_TOL


def test_faux_canard_leaves_the_saddle_on_both_sheets(params):
    on_a, on_r = compute_faux_canard(params)
    z = folded_saddle(params)
    for curve in (on_a, on_r):
        assert (curve.start.y2, curve.start.theta) == (z.y2, z.theta)
        assert curve.provenance == "faux_canard"
    assert on_a.meta["sheet"] == "attracting"
    assert on_r.meta["sheet"] == "repelling-"
    assert np.all(np.abs(on_a.y2[1:-1]) < params.delta)
    assert np.all(on_r.y2[1:] < -params.delta)
    # theta grows on C_a and decreases on C_r^- in desingularized time
    assert on_a.end.theta > z.theta
    assert on_r.end.theta < z.theta
    assert on_a.meta["termination"] in {"extent", "fold_plus", "fold_minus"}
    assert on_r.meta["termination"] in {"floor", "fold_minus", "extent"}


@pytest.mark.slow
def test_theta_upsilon_sweep_over_mu_d(params):
    rows = theta_upsilon_sweep(params, [0.4, 0.45], [0.85, 0.9])
    assert [row.mu_d for row in rows] == [0.4, 0.45]
    reference = rows[0]
    assert reference.xi_pd == pytest.approx(0.8179, abs=1e-3)
    assert reference.theta_upsilon[0] == pytest.approx(theta_upsilon(params.with_(xi=0.85)), abs=1e-12)
    assert reference.theta_upsilon[0] > reference.theta_upsilon[1]
    assert reference.errors == []
    assert rows[1].to_dict()["xi_values"] == [0.85, 0.9]
