# models/singular_geometry.py
"""eps = 0 geometry on the critical manifold C in (y2, theta) coordinates:
folded singularities, canards, jump sets, the fold return maps G/L, the
section Upsilon and the critical forcing rates xi_dn, xi_pd, xi_t.

Curves are kept in raw (unwrapped) theta. The symmetry acts on curves as
(y2, theta) -> (-y2, theta + pi) without reduction, so that symmetric
curves stay on the same lift as the curves they are compared with.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property, partial
from typing import Optional

import numpy as np

from models.errors import (BracketError, CanardMissesSectionError, DegenerateEigenvectorError,
                           FoldedSingularityFoldError, GeometryError, InadmissiblePointError,
                           NumericalError, ThetaRangeError)
from models.friction_model import (ReducedPoint, TWO_PI, half_circle_return, layer_eigenvalue,
                                   manifold_x, reduced_desing_rhs)
from models.ode_engine import EventSpec, bisect_root, integrate

logger = logging.getLogger(__name__)

GEOMETRY_TOLS = (1e-11, 1e-12)
S_MAX = 1e3
SEED_OFFSET = 1e-6
MAX_EDGE = 1e-3
SEED_CHECK_REFINE = 10
SEED_DEFECT_TOL = 1e-7
FOLD_TOL = 1e-12
TRANSVERSE_ANGLE = 1e-3
FLOOR_FACTOR = 10.0
FUNNEL_RADIUS = 1e-6


class Side(str, Enum):
    MINUS = "minus"
    PLUS = "plus"


class SingularityKind(str, Enum):
    SADDLE = "saddle"
    NODE = "node"
    FOCUS = "focus"


SYMMETRIC_PROVENANCE = {
    "gamma_minus": "gamma_plus",
    "gamma_plus": "gamma_minus",
    "gamma_minus_tilde": "gamma_plus_tilde",
    "gamma_plus_tilde": "gamma_minus_tilde",
}


# Angles and intervals

def theta_minus(params):
    """theta_-(1/xi) = arccos(delta/xi); 0 once the folded singularities are gone."""
    return math.acos(min(params.delta * params.inv_xi, 1.0))


def theta_plus(params):
    return math.pi - theta_minus(params)


def wrap_angle(theta):
    """Representative of theta in (-pi, pi]."""
    wrapped = math.fmod(theta + math.pi, TWO_PI)
    if wrapped <= 0:
        wrapped += TWO_PI
    return wrapped - math.pi


@dataclass(frozen=True)
class ThetaInterval:
    """Open arc (lo, hi) of the circle, lo <= hi <= lo + 2 pi."""
    lo: float
    hi: float

    @property
    def length(self):
        return self.hi - self.lo

    @property
    def is_empty(self):
        return self.hi <= self.lo

    def contains(self, theta):
        if self.is_empty:
            return False
        u = self.lo + (theta - self.lo) % TWO_PI
        return self.lo < u < self.hi

    def symmetric(self):
        return ThetaInterval(self.lo + math.pi, self.hi + math.pi)

    def to_dict(self):
        return {"lo": self.lo, "hi": self.hi}


def jump_set_J(params, side=Side.MINUS):
    """Regular jump points on the fold line, J- = (-theta_-, theta_-)."""
    th = theta_minus(params)
    interval = ThetaInterval(-th, th)
    return interval.symmetric() if Side(side) is Side.PLUS else interval


# Folded singularities

@dataclass(frozen=True)
class FoldedSingularity:
    location: ReducedPoint
    kind: SingularityKind
    fold: Side
    trace: float
    det: float
    discriminant: float
    eigenvalues: tuple
    eigenvectors: tuple

    @property
    def is_saddle(self):
        return self.kind is SingularityKind.SADDLE

    def to_dict(self):
        return {
            "y2": self.location.y2, "theta": self.location.theta, "kind": self.kind.value,
            "fold": self.fold.value, "trace": self.trace, "det": self.det,
            "discriminant": self.discriminant,
            "eigenvalues": [[float(np.real(v)), float(np.imag(v))] for v in self.eigenvalues],
        }


def reddes_jacobian(params, p):
    phi = params.regularization
    return np.array([[-params.inv_xi, math.sin(p.theta)],
                     [params.mu_d * phi.deriv2(p.y2), 0.0]])


def _classify(params, p, fold):
    J = reddes_jacobian(params, p)
    trace = float(np.trace(J))
    det = float(np.linalg.det(J))
    disc = trace * trace - 4.0 * det
    if det < 0:
        kind = SingularityKind.SADDLE
    elif disc >= 0:
        kind = SingularityKind.NODE
    else:
        kind = SingularityKind.FOCUS
    values, vectors = np.linalg.eig(J)
    return FoldedSingularity(
        location=p, kind=kind, fold=fold, trace=trace, det=det, discriminant=disc,
        eigenvalues=tuple(values), eigenvectors=tuple(map(tuple, vectors.T)),
    )


def _require_folded(params):
    if not params.xi > params.delta:
        raise FoldedSingularityFoldError(
            f"xi={params.xi} <= delta={params.delta}: no folded singularities "
            f"(they merge in a fold at xi = delta)")


def folded_singularities(params):
    """The four equilibria of the desingularized flow on the fold lines,
    ordered z-, the F- node/focus, the F+ node/focus, z+."""
    _require_folded(params)
    d = params.delta
    th = theta_minus(params)
    return [
        _classify(params, ReducedPoint(-d, th), Side.MINUS),
        _classify(params, ReducedPoint(-d, TWO_PI - th), Side.MINUS),
        _classify(params, ReducedPoint(d, math.pi - th), Side.PLUS),
        _classify(params, ReducedPoint(d, th + math.pi), Side.PLUS),
    ]


def folded_saddle(params, side=Side.MINUS):
    """z- = (-delta, theta_-) or its mirror z+ = (delta, theta_- + pi)."""
    _require_folded(params)
    th = theta_minus(params)
    if Side(side) is Side.PLUS:
        return ReducedPoint(params.delta, th + math.pi)
    return ReducedPoint(-params.delta, th)


def _saddle_directions(params):
    """Unit (stable, unstable) eigenvectors of z- in (y2, theta) coordinates.

    For eigenvalue lam the vector (lam, c), c = mu_d phi''(-delta) > 0,
    spans the eigenspace; the stable one points into y2 < -delta.
    """
    z = folded_saddle(params, Side.MINUS)
    J = reddes_jacobian(params, z)
    det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
    if abs(det) < 1e-14:
        raise DegenerateEigenvectorError(f"folded saddle is degenerate (det={det:.3g})")
    trace = J[0, 0]
    root = math.sqrt(trace * trace - 4.0 * det)
    c = J[1, 0]
    vectors = []
    for lam in ((trace - root) / 2.0, (trace + root) / 2.0):
        v = np.array([lam, c])
        vectors.append(v / np.linalg.norm(v))
    return vectors[0], vectors[1]


def discriminant_at(params, xi):
    """Discriminant of the non-saddle folded singularities as a function of xi."""
    phi = params.regularization
    ratio = min(params.delta / xi, 1.0)
    return (1.0 / xi) ** 2 - 4.0 * params.mu_d * abs(phi.deriv2(params.delta)) * math.sqrt(1.0 - ratio * ratio)


def xi_dn(params, bracket=None, tol=1e-10):
    """Node/focus transition of the non-saddle folded singularities."""
    f = partial(discriminant_at, params)
    if bracket is None:
        grid = params.delta * np.geomspace(1.0 + 1e-9, 1e3, 400)
        values = [f(x) for x in grid]
        for a, b, fa, fb in zip(grid, grid[1:], values, values[1:]):
            if fa > 0 >= fb:
                bracket = (a, b)
                break
        else:
            raise BracketError("discriminant does not change sign on the scanned xi range")
    lo, hi = bracket
    if not lo > params.delta:
        raise BracketError(f"bracket {bracket} must lie in xi > delta")
    return bisect_root(f, (lo, hi), tol=tol)


# Curves

@dataclass
class PlanarCurve:
    """Polyline on C in (y2, theta) coordinates with provenance."""
    y2: np.ndarray
    theta: np.ndarray
    provenance: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.y2 = np.asarray(self.y2, dtype=float)
        self.theta = np.asarray(self.theta, dtype=float)
        if self.y2.shape != self.theta.shape:
            raise ValueError("y2 and theta must have equal length")

    def __len__(self):
        return self.y2.size

    @cached_property
    def arclength(self):
        steps = np.hypot(np.diff(self.y2), np.diff(self.theta))
        return np.concatenate([[0.0], np.cumsum(steps)])

    @property
    def max_edge(self):
        if len(self) < 2:
            return 0.0
        return float(np.max(np.diff(self.arclength)))

    @property
    def start(self):
        return ReducedPoint(float(self.y2[0]), float(self.theta[0]))

    @property
    def end(self):
        return ReducedPoint(float(self.y2[-1]), float(self.theta[-1]))

    def points(self):
        return [ReducedPoint(float(a), float(b)) for a, b in zip(self.y2, self.theta)]

    def symmetric(self, provenance=None):
        return PlanarCurve(-self.y2, self.theta + math.pi,
                           provenance or SYMMETRIC_PROVENANCE.get(self.provenance, self.provenance),
                           dict(self.meta))

    def shifted(self, dtheta):
        return PlanarCurve(self.y2, self.theta + dtheta, self.provenance, dict(self.meta))

    def reversed(self):
        return PlanarCurve(self.y2[::-1], self.theta[::-1], self.provenance, dict(self.meta))

    def y2_at(self, theta):
        """y2 over theta for curves that are graphs over theta."""
        order = np.argsort(self.theta)
        return np.interp(theta, self.theta[order], self.y2[order])

    def clipped(self, theta_lo, theta_hi):
        """Part of a theta-graph curve over [theta_lo, theta_hi], ends interpolated."""
        lo, hi = min(theta_lo, theta_hi), max(theta_lo, theta_hi)
        inside = (self.theta > lo) & (self.theta < hi)
        theta = np.concatenate([[lo], self.theta[inside], [hi]])
        order = np.argsort(theta)
        theta = theta[order]
        return PlanarCurve(self.y2_at(theta), theta, self.provenance, dict(self.meta))

    def to_rows(self):
        s = self.arclength
        return [(self.provenance, float(s[i]), float(self.y2[i]), float(self.theta[i]))
                for i in range(len(self))]


def _reduced_run(params, seed, reverse, events, max_edge, s_max=S_MAX):
    """Integrate the desingularized flow from seed; returns (y2, theta, last event name)."""
    rhs = reduced_desing_rhs(params, reverse=reverse)
    traj, hits = integrate(rhs, [seed.y2, seed.theta], (0.0, s_max), tols=GEOMETRY_TOLS,
                           events=events, max_steps=400000)
    reason = hits[-1].name if hits and hits[-1].terminal else "s_max"
    nodes = traj.evaluate(traj.dense_times(max_edge))
    nodes[-1] = traj.y_final
    return nodes[:, 0], nodes[:, 1], reason


def _near_funnel(params, p):
    for fs in folded_singularities(params):
        if not fs.is_saddle and math.hypot(p.y2 - fs.location.y2,
                                           wrap_angle(p.theta - fs.location.theta)) < FUNNEL_RADIUS:
            return True
    return False


def _gamma_minus(params, extent, seed_offset, max_edge):
    z = folded_saddle(params, Side.MINUS)
    v_s, _ = _saddle_directions(params)
    d = params.delta
    seed = ReducedPoint(z.y2 - seed_offset * v_s[0], z.theta - seed_offset * v_s[1])
    events = (
        EventSpec(lambda s, u: u[1] - (z.theta - extent), direction=-1, terminal=True, name="extent"),
        EventSpec(lambda s, u: u[0] - d, direction=1, terminal=True, name="fold_plus"),
        EventSpec(lambda s, u: u[0] + d, direction=-1, terminal=True, name="fold_minus"),
    )
    y2, theta, reason = _reduced_run(params, seed, True, events, max_edge)
    if reason.startswith("fold") and _near_funnel(params, ReducedPoint(y2[-1], theta[-1])):
        reason = "funnel"
    return PlanarCurve(np.concatenate([[z.y2], y2]), np.concatenate([[z.theta], theta]),
                       "gamma_minus", {"termination": reason, "seed_offset": seed_offset})


def _gamma_minus_tilde(params, extent, y2_floor, seed_offset, max_edge):
    z = folded_saddle(params, Side.MINUS)
    v_s, _ = _saddle_directions(params)
    d = params.delta
    seed = ReducedPoint(z.y2 + seed_offset * v_s[0], z.theta + seed_offset * v_s[1])
    events = (
        EventSpec(lambda s, u: u[0] - y2_floor, direction=-1, terminal=True, name="floor"),
        EventSpec(lambda s, u: u[0] + d, direction=1, terminal=True, name="fold_minus"),
        EventSpec(lambda s, u: u[1] - (z.theta + extent), direction=1, terminal=True, name="extent"),
    )
    y2, theta, reason = _reduced_run(params, seed, True, events, max_edge)
    return PlanarCurve(np.concatenate([[z.y2], y2]), np.concatenate([[z.theta], theta]),
                       "gamma_minus_tilde", {"termination": reason, "y2_floor": y2_floor})


def seed_defect(params, extent=TWO_PI, seed_offset=SEED_OFFSET, max_edge=MAX_EDGE):
    """Sup distance over theta between gamma_- seeded at seed_offset and at half of it.

    Both runs are resampled SEED_CHECK_REFINE times finer than max_edge so the
    comparison is not dominated by polyline interpolation.
    """
    fine = max_edge / SEED_CHECK_REFINE
    full = _gamma_minus(params, extent, seed_offset, fine)
    half = _gamma_minus(params, extent, seed_offset / 2.0, fine)
    lo = max(full.theta.min(), half.theta.min())
    hi = min(full.theta.max(), half.theta.max())
    grid = np.linspace(lo, hi, 2000)
    return float(np.max(np.abs(full.y2_at(grid) - half.y2_at(grid))))


def compute_canard(params, branch=Side.MINUS, extent=TWO_PI, y2_floor=None,
                   seed_offset=SEED_OFFSET, max_edge=MAX_EDGE, check_seed=False):
    """Vrai canard gamma (on C_a) and its continuation gamma_tilde (on C_r).

    Both are branches of the stable manifold of the folded saddle, integrated
    backward in desingularized time: gamma until theta has dropped by
    `extent` or a fold line is reached, gamma_tilde until y2 hits the floor
    (default -10 delta). The plus branch is the symmetric image.
    """
    _require_folded(params)
    if y2_floor is None:
        y2_floor = -FLOOR_FACTOR * params.delta
    if not y2_floor < -params.delta:
        raise GeometryError(f"y2 floor {y2_floor} must lie below -delta")
    gamma = _gamma_minus(params, extent, seed_offset, max_edge)
    gamma_tilde = _gamma_minus_tilde(params, extent, y2_floor, seed_offset, max_edge)
    if check_seed:
        gamma.meta["seed_defect"] = seed_defect(params, extent, seed_offset, max_edge)
    if Side(branch) is Side.PLUS:
        return gamma.symmetric(), gamma_tilde.symmetric()
    return gamma, gamma_tilde


def compute_faux_canard(params, extent=TWO_PI, y2_floor=None, seed_offset=SEED_OFFSET,
                        max_edge=MAX_EDGE):
    """Unstable manifold of z-: the branch entering C_a and the branch on C_r^-,
    both integrated forward in desingularized time."""
    _require_folded(params)
    if y2_floor is None:
        y2_floor = -FLOOR_FACTOR * params.delta
    z = folded_saddle(params, Side.MINUS)
    _, v_u = _saddle_directions(params)
    d = params.delta
    into_a = ReducedPoint(z.y2 + seed_offset * v_u[0], z.theta + seed_offset * v_u[1])
    events_a = (
        EventSpec(lambda s, u: u[1] - (z.theta + extent), direction=1, terminal=True, name="extent"),
        EventSpec(lambda s, u: u[0] - d, direction=1, terminal=True, name="fold_plus"),
        EventSpec(lambda s, u: u[0] + d, direction=-1, terminal=True, name="fold_minus"),
    )
    y2_a, th_a, reason_a = _reduced_run(params, into_a, False, events_a, max_edge)
    into_r = ReducedPoint(z.y2 - seed_offset * v_u[0], z.theta - seed_offset * v_u[1])
    events_r = (
        EventSpec(lambda s, u: u[0] - y2_floor, direction=-1, terminal=True, name="floor"),
        EventSpec(lambda s, u: u[0] + d, direction=1, terminal=True, name="fold_minus"),
        EventSpec(lambda s, u: u[1] - (z.theta - extent), direction=-1, terminal=True, name="extent"),
    )
    y2_r, th_r, reason_r = _reduced_run(params, into_r, False, events_r, max_edge)
    on_a = PlanarCurve(np.concatenate([[z.y2], y2_a]), np.concatenate([[z.theta], th_a]),
                       "faux_canard", {"sheet": "attracting", "termination": reason_a})
    on_r = PlanarCurve(np.concatenate([[z.y2], y2_r]), np.concatenate([[z.theta], th_r]),
                       "faux_canard", {"sheet": "repelling-", "termination": reason_r})
    return on_a, on_r


# Fold return maps

def _solve_on_attracting(params, value):
    """Unique y2 in [-delta, delta] with phi(y2) = value (phi increasing there)."""
    mu = params.mu
    if not -mu <= value <= mu:
        raise InadmissiblePointError(f"phi value {value:.6g} outside [-{mu:.6g}, {mu:.6g}]")
    phi = params.regularization
    return bisect_root(lambda s: phi(s) - value, (-params.delta, params.delta), tol=1e-15)


def _solve_on_attracting_many(params, values):
    """Vectorized bisection for arrays of phi values."""
    phi = params.regularization
    values = np.asarray(values, dtype=float)
    lo = np.full(values.shape, -params.delta)
    hi = np.full(values.shape, params.delta)
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        below = phi(mid) < values
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def y2_minus(params):
    """Landing height of G- on the fold: phi(y2_-) = mu - 2."""
    return _solve_on_attracting(params, params.mu - 2.0)


def map_G(params, side, p):
    """Jump from the closure of a repelling sheet along the half-circle slip
    arc, landing on C_a at the same theta."""
    if Side(side) is Side.PLUS:
        image = map_G(params, Side.MINUS, ReducedPoint(-p.y2, p.theta))
        return ReducedPoint(-image.y2, p.theta)
    if not p.y2 <= -params.delta + FOLD_TOL:
        raise InadmissiblePointError(f"G- needs y2 <= -delta, got y2={p.y2:.12g}", )
    x0 = manifold_x(params, p)
    x1 = half_circle_return(params, x0, p.theta)
    value = (-x1 - math.sin(p.theta)) / params.mu_d
    return ReducedPoint(_solve_on_attracting(params, value), p.theta)


def map_L(params, side, p, allow_fold=False):
    """Direct fast fiber from C_r to C_a: phi(y2_1) = phi(y2_0)."""
    if Side(side) is Side.PLUS:
        image = map_L(params, Side.MINUS, ReducedPoint(-p.y2, p.theta), allow_fold)
        return ReducedPoint(-image.y2, p.theta)
    if allow_fold and abs(p.y2 + params.delta) <= FOLD_TOL:
        return ReducedPoint(-params.delta, p.theta)
    if not p.y2 < -params.delta:
        raise InadmissiblePointError(f"L- needs y2 < -delta, got y2={p.y2:.12g}")
    return ReducedPoint(_solve_on_attracting(params, float(params.regularization(p.y2))), p.theta)


def canard_image_curves(params, gamma_tilde=None):
    """G- and L- images of gamma_tilde_-, node by node (theta preserved)."""
    if gamma_tilde is None:
        _, gamma_tilde = compute_canard(params, Side.MINUS)
    if np.any(gamma_tilde.y2 > -params.delta + FOLD_TOL):
        raise InadmissiblePointError("gamma_tilde leaves the closure of C_r^-")
    phi = params.regularization
    source = np.minimum(gamma_tilde.y2, -params.delta)
    g_y2 = _solve_on_attracting_many(params, -2.0 - phi(source))
    l_y2 = _solve_on_attracting_many(params, phi(source))
    meta = {"source_y2": source.copy()}
    return (PlanarCurve(g_y2, gamma_tilde.theta.copy(), "G_image", dict(meta)),
            PlanarCurve(l_y2, gamma_tilde.theta.copy(), "L_image", dict(meta)))


def jump_image_curve(params, side=Side.MINUS, n=200):
    """G(J) on the line y2 = y2_- (or its mirror)."""
    J = jump_set_J(params, Side.MINUS)
    theta = np.linspace(J.lo, J.hi, n)
    curve = PlanarCurve(np.full(n, y2_minus(params)), theta, "J_image")
    return curve.symmetric("J_image") if Side(side) is Side.PLUS else curve


# Section Upsilon

def upsilon_arc(params):
    """Arc of {y2 = y2_-} where the reduced flow crosses downward: cos(theta) > -y2_-/xi."""
    c = -y2_minus(params) * params.inv_xi
    if c <= -1.0:
        return ThetaInterval(-math.pi, math.pi)
    if c >= 1.0:
        return ThetaInterval(0.0, 0.0)
    a = math.acos(c)
    return ThetaInterval(-a, a)


def upsilon_section_curve(params, n=200):
    arc = upsilon_arc(params)
    theta = np.linspace(arc.lo, arc.hi, n)
    return PlanarCurve(np.full(n, y2_minus(params)), theta, "upsilon_section")


def theta_upsilon(params, extent=TWO_PI, seed_offset=SEED_OFFSET, max_restarts=50):
    """theta of the first admissible crossing of gamma_+ (flowed backward from
    z+) with the section {y2 = y2_-}, reported in (-pi, pi]."""
    _require_folded(params)
    v_s, _ = _saddle_directions(params)
    z = folded_saddle(params, Side.PLUS)
    # symmetric image of the gamma_- seed
    state = np.array([z.y2 + seed_offset * v_s[0], z.theta - seed_offset * v_s[1]])
    theta_stop = z.theta - extent
    level = y2_minus(params)
    arc = upsilon_arc(params)
    d = params.delta
    rhs = reduced_desing_rhs(params, reverse=True)
    events = (
        EventSpec(lambda s, u: u[0] - level, terminal=True, name="section"),
        EventSpec(lambda s, u: u[0] + d, direction=-1, terminal=True, name="fold_minus"),
        EventSpec(lambda s, u: u[0] - d, direction=1, terminal=True, name="fold_plus"),
        EventSpec(lambda s, u: u[1] - theta_stop, direction=-1, terminal=True, name="extent"),
    )
    budget = S_MAX
    for _ in range(max_restarts):
        traj, hits = integrate(rhs, state, (0.0, budget), tols=GEOMETRY_TOLS, events=events,
                               max_steps=400000)
        hit = hits[-1] if hits and hits[-1].terminal else None
        if hit is None:
            break
        if hit.name != "section":
            raise CanardMissesSectionError(
                f"gamma_+ leaves C_a ({hit.name}) at theta={hit.state[1]:.6f} "
                f"without crossing the section y2={level:.6f} (xi={params.xi})")
        theta = float(hit.state[1])
        if arc.contains(theta):
            return wrap_angle(theta)
        budget -= traj.t_final
        state = hit.state
        if budget <= 0:
            break
    raise CanardMissesSectionError(f"no admissible crossing of gamma_+ with the section (xi={params.xi})")


def _scan_and_bisect(f, bracket, tol, points, what):
    lo, hi = bracket
    grid = np.linspace(lo, hi, points)
    samples = []
    for xi in grid:
        try:
            samples.append((xi, f(xi)))
        except GeometryError as error:
            logger.warning(f"{what}: skipping xi={xi:.6f} ({error})")
    for (a, fa), (b, fb) in zip(samples, samples[1:]):
        if fa == 0.0:
            return a
        if fa * fb < 0:
            return bisect_root(f, (a, b), tol=tol)
    raise BracketError(f"{what}: no sign change on [{lo}, {hi}]")


def find_xi_pd(params, bracket=(0.65, 1.2), tol=1e-6, scan_points=12):
    """xi where theta_Upsilon meets theta_-: gamma_+ passes through G-(z-)."""
    def gap(xi):
        p = params.with_(xi=float(xi))
        return theta_upsilon(p) - theta_minus(p)
    return _scan_and_bisect(gap, bracket, tol, scan_points, "xi_pd")


# Crossings of gamma_+ with the image curves

@dataclass
class CanardGeometry:
    """All canard-derived curves at one parameter point."""
    gamma_minus: PlanarCurve
    gamma_minus_tilde: PlanarCurve
    gamma_plus: PlanarCurve
    gamma_plus_tilde: PlanarCurve
    G_image: PlanarCurve
    L_image: PlanarCurve

    def curves(self):
        return [self.gamma_minus, self.gamma_minus_tilde, self.gamma_plus,
                self.gamma_plus_tilde, self.G_image, self.L_image]


def canard_geometry(params, extent=TWO_PI, y2_floor=None):
    gamma, gamma_tilde = compute_canard(params, Side.MINUS, extent=extent, y2_floor=y2_floor)
    g_image, l_image = canard_image_curves(params, gamma_tilde)
    return CanardGeometry(gamma, gamma_tilde, gamma.symmetric(), gamma_tilde.symmetric(),
                          g_image, l_image)


@dataclass(frozen=True)
class CurveCrossing:
    point: ReducedPoint
    angle: float
    transverse: bool
    mechanism: str  # "G" or "L"
    gamma_position: float  # arclength along gamma_+
    source: ReducedPoint  # preimage on gamma_tilde_-
    upward: bool = False  # image, traversed away from the folded saddle, passes from below gamma_+ to above

    def to_dict(self):
        return {"y2": self.point.y2, "theta": self.point.theta, "angle": self.angle,
                "transverse": self.transverse, "mechanism": self.mechanism, "upward": self.upward,
                "source_y2": self.source.y2, "source_theta": self.source.theta}


def polyline_crossings(a_y2, a_theta, b_y2, b_theta, chunk=256):
    """Exact segment-segment crossings of two polylines in the (theta, y2) plane.

    Returns a list of (i, t, j, u, sin_angle): segment indices, local
    parameters in [0, 1) and the sine of the crossing angle.
    """
    A = np.column_stack([a_theta, a_y2])
    B = np.column_stack([b_theta, b_y2])
    if len(A) < 2 or len(B) < 2:
        return []
    b0, b1 = B[:-1], B[1:]
    s = b1 - b0
    bmin, bmax = np.minimum(b0, b1), np.maximum(b0, b1)
    found = []
    for start in range(0, len(A) - 1, chunk):
        a0 = A[start:start + chunk + 1][:-1]
        a1 = A[start + 1:start + chunk + 1]
        amin, amax = np.minimum(a0, a1), np.maximum(a0, a1)
        overlap = ((amin[:, None, 0] <= bmax[None, :, 0]) & (amax[:, None, 0] >= bmin[None, :, 0])
                   & (amin[:, None, 1] <= bmax[None, :, 1]) & (amax[:, None, 1] >= bmin[None, :, 1]))
        ii, jj = np.nonzero(overlap)
        if ii.size == 0:
            continue
        r = a1[ii] - a0[ii]
        q = s[jj]
        qp = b0[jj] - a0[ii]
        denom = r[:, 0] * q[:, 1] - r[:, 1] * q[:, 0]
        nonzero = denom != 0.0
        safe = np.where(nonzero, denom, 1.0)
        t = (qp[:, 0] * q[:, 1] - qp[:, 1] * q[:, 0]) / safe
        u = (qp[:, 0] * r[:, 1] - qp[:, 1] * r[:, 0]) / safe
        hit = nonzero & (t >= 0) & (t < 1) & (u >= 0) & (u < 1)
        norms = np.linalg.norm(r, axis=1) * np.linalg.norm(q, axis=1)
        for k in np.nonzero(hit)[0]:
            sin_angle = min(1.0, abs(denom[k]) / norms[k])
            found.append((start + int(ii[k]), float(t[k]), int(jj[k]), float(u[k]), sin_angle))
    return found


def _crossings_with(gamma, image, source, mechanism):
    out = []
    for lift in (-1, 0, 1):
        shift = lift * TWO_PI
        for i, t, j, u, sin_angle in polyline_crossings(gamma.y2, gamma.theta,
                                                        image.y2, image.theta + shift):
            y2 = gamma.y2[i] + t * (gamma.y2[i + 1] - gamma.y2[i])
            theta = gamma.theta[i] + t * (gamma.theta[i + 1] - gamma.theta[i])
            s_y2 = source.y2[j] + u * (source.y2[j + 1] - source.y2[j])
            s_theta = source.theta[j] + u * (source.theta[j + 1] - source.theta[j]) + shift
            position = gamma.arclength[i] + t * (gamma.arclength[i + 1] - gamma.arclength[i])
            angle = math.asin(sin_angle)
            r_theta, r_y2 = gamma.theta[i + 1] - gamma.theta[i], gamma.y2[i + 1] - gamma.y2[i]
            q_theta, q_y2 = image.theta[j + 1] - image.theta[j], image.y2[j + 1] - image.y2[j]
            upward = math.copysign(1.0, r_theta) * (q_y2 * r_theta - r_y2 * q_theta) > 0.0
            out.append(CurveCrossing(ReducedPoint(float(y2), float(theta)), angle,
                                     angle > TRANSVERSE_ANGLE, mechanism, float(position),
                                     ReducedPoint(float(s_y2), float(s_theta)), bool(upward)))
    return out


def intersections_gamma_plus_image(params, geometry=None):
    """All crossings of gamma_+ with G-(gamma_tilde_-) and L-(gamma_tilde_-),
    sorted by theta along gamma_+."""
    geometry = geometry or canard_geometry(params)
    crossings = (_crossings_with(geometry.gamma_plus, geometry.G_image,
                                 geometry.gamma_minus_tilde, "G")
                 + _crossings_with(geometry.gamma_plus, geometry.L_image,
                                   geometry.gamma_minus_tilde, "L"))
    crossings.sort(key=lambda c: c.point.theta)
    logger.debug(f"xi={params.xi}: {len(crossings)} crossings of gamma_+ with the image curves")
    return crossings


def _count_G(params):
    geometry = canard_geometry(params)
    crossings = [c for c in intersections_gamma_plus_image(params, geometry)
                 if c.mechanism == "G" and c.transverse]
    return len(crossings), geometry, crossings


def _point_to_polyline(points, y2, theta, chunk=256):
    """Distance from each point (theta, y2) to the polyline."""
    P = np.column_stack([theta, y2])
    a, b = P[:-1], P[1:]
    d = b - a
    dd = np.maximum(np.einsum("ij,ij->i", d, d), 1e-300)
    out = np.empty(len(points))
    for start in range(0, len(points), chunk):
        pts = points[start:start + chunk]
        w = pts[:, None, :] - a[None, :, :]
        t = np.clip(np.einsum("mkj,kj->mk", w, d) / dd[None, :], 0.0, 1.0)
        proj = a[None, :, :] + t[:, :, None] * d[None, :, :]
        out[start:start + chunk] = np.min(np.linalg.norm(pts[:, None, :] - proj, axis=2), axis=1)
    return out


def _signed_gap(geometry, crossings):
    """+ min distance of G_image to gamma_+ without crossings, - the deepest
    penetration between the two crossings otherwise."""
    image = geometry.G_image
    gamma = geometry.gamma_plus
    # only the image part on the lift where gamma_+ lives
    lo, hi = gamma.theta.min(), gamma.theta.max()
    pts = []
    for lift in (-1, 0, 1):
        theta = image.theta + lift * TWO_PI
        mask = (theta >= lo) & (theta <= hi)
        if crossings:
            a = min(c.source.theta for c in crossings)
            b = max(c.source.theta for c in crossings)
            mask &= (theta >= a) & (theta <= b)
        pts.append(np.column_stack([theta[mask], image.y2[mask]]))
    pts = np.concatenate(pts)
    if pts.size == 0:
        return math.inf if not crossings else 0.0
    dist = _point_to_polyline(pts, gamma.y2, gamma.theta)
    return -float(dist.max()) if crossings else float(dist.min())


def find_xi_t(params, bracket=(0.72, 0.80), tol=1e-4):
    """Tangency of gamma_+ with G-(gamma_tilde_-).

    The number of transverse crossings drops by two at the tangency, so the
    bracket is bisected on that count down to `tol`. The final estimate is a
    secant step on the signed gap (minimum distance between the curves where
    they do not cross, minus the deepest overlap where they do) between the
    two bracket ends; the midpoint is returned when the gap does not change
    sign. No distance minimisation over the curve parameters is done: the
    polyline crossing test already resolves the gap to the canard mesh.
    """
    lo, hi = bracket
    n_lo, geo_lo, cr_lo = _count_G(params.with_(xi=float(lo)))
    n_hi, geo_hi, cr_hi = _count_G(params.with_(xi=float(hi)))
    if n_lo == n_hi:
        raise BracketError(f"xi_t: crossing count {n_lo} does not change on [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        n_mid, geo_mid, cr_mid = _count_G(params.with_(xi=mid))
        if n_mid == n_lo:
            lo, geo_lo, cr_lo = mid, geo_mid, cr_mid
        else:
            hi, geo_hi, cr_hi = mid, geo_mid, cr_mid
    g_lo = _signed_gap(geo_lo, cr_lo)
    g_hi = _signed_gap(geo_hi, cr_hi)
    if math.isfinite(g_lo) and math.isfinite(g_hi) and g_lo != g_hi and g_lo * g_hi < 0:
        root = lo - g_lo * (hi - lo) / (g_hi - g_lo)
        return float(min(max(root, lo), hi))
    return 0.5 * (lo + hi)


# Integrals and the Hamiltonian limit

def _trapezoid(f, a, b, n):
    values = f(np.linspace(a, b, n + 1))
    return (b - a) / n * (values.sum() - 0.5 * (values[0] + values[-1]))


def _trapezoid_converged(f, a, b, tol, n0=64, n_max=2 ** 20):
    n = n0
    prev = _trapezoid(f, a, b, n)
    while n < n_max:
        n *= 2
        value = _trapezoid(f, a, b, n)
        if abs(value - prev) < tol:
            return float(value)
        prev = value
    logger.warning(f"trapezoid on [{a:.6f}, {b:.6f}] stopped at n={n} before reaching {tol:g}")
    return float(prev)


def a6_integral(params, cycle, theta_lower=None, tol=1e-8):
    """Integral of lambda(m(s)) over (theta_lower, jump angle) along the slow
    graph of a singular cycle.

    The slow graph covers one half period; outside it the symmetric
    extension is used, on which lambda(m) is pi-periodic because lambda is even.
    """
    arcs = [arc for arc in getattr(cycle, "slow_arcs", []) if len(arc) >= 2]
    if not arcs:
        raise ThetaRangeError("cycle carries no slow graph")
    start, jump = cycle.theta_range
    lower = start if theta_lower is None else theta_lower
    if not lower < jump:
        raise ThetaRangeError(f"empty integration range ({lower}, {jump})")
    if jump - lower > TWO_PI:
        raise ThetaRangeError("integration range exceeds one full period")
    covered = sum(arc.theta.max() - arc.theta.min() for arc in arcs)
    if abs(covered - math.pi) > 1e-6:
        raise ThetaRangeError(f"slow graph covers {covered:.6f} of theta, expected pi")
    total = 0.0
    k_lo = int(math.floor((lower - start) / math.pi)) - 1
    k_hi = int(math.ceil((jump - start) / math.pi)) + 1
    for arc in arcs:
        order = np.argsort(arc.theta)
        th, y2 = arc.theta[order], arc.y2[order]
        for k in range(k_lo, k_hi + 1):
            a = max(lower, th[0] + k * math.pi)
            b = min(jump, th[-1] + k * math.pi)
            if b <= a:
                continue
            shift = k * math.pi
            total += _trapezoid_converged(
                lambda s, th=th, y2=y2, shift=shift: layer_eigenvalue(params, np.interp(s - shift, th, y2)),
                a, b, tol)
    return total


def hamiltonian(params, p):
    """H = mu_d phi(y2) + sin(theta), conserved by the reduced flow at 1/xi = 0."""
    return params.mu_d * float(params.regularization(p.y2)) + math.sin(p.theta)


def hamiltonian_gamma_min(params):
    """Lowest y2 of gamma_+ in the limit xi -> inf: mu_d phi(y2) = mu_s - 2."""
    value = (params.mu_s - 2.0) / params.mu_d
    if not -params.mu < value < params.mu:
        raise CanardMissesSectionError(
            f"gamma_+ reaches F- before its minimum in the Hamiltonian limit (mu_s={params.mu_s})")
    return _solve_on_attracting(params, value)


def gamma_plus_meets_jump_image_at_infinity(params):
    """Whether gamma_+ reaches down to G-(J-) = {y2 = y2_-} as xi -> inf."""
    try:
        return hamiltonian_gamma_min(params) <= y2_minus(params)
    except CanardMissesSectionError:
        return True


# Sweeps

@dataclass
class SweepRow:
    mu_d: float
    xi_values: list
    theta_upsilon: list
    xi_pd: Optional[float] = None
    xi_t: Optional[float] = None
    errors: list = field(default_factory=list)

    def to_dict(self):
        return {"mu_d": self.mu_d, "xi_pd": self.xi_pd, "xi_t": self.xi_t,
                "theta_upsilon": self.theta_upsilon, "xi_values": self.xi_values,
                "errors": self.errors}


def _sweep_one(params, xi_values, pd_bracket, t_bracket, mu_d):
    base = params.with_(mu_d=float(mu_d))
    row = SweepRow(mu_d=float(mu_d), xi_values=[float(x) for x in xi_values], theta_upsilon=[])
    for xi in xi_values:
        try:
            row.theta_upsilon.append(theta_upsilon(base.with_(xi=float(xi))))
        except (GeometryError, NumericalError) as error:
            row.theta_upsilon.append(None)
            row.errors.append(f"theta_upsilon(xi={xi:.6f}): {error}")
    try:
        row.xi_pd = find_xi_pd(base, pd_bracket)
    except (GeometryError, NumericalError) as error:
        row.errors.append(f"xi_pd: {error}")
    if t_bracket is not None:
        try:
            row.xi_t = find_xi_t(base, t_bracket)
        except (GeometryError, NumericalError) as error:
            row.errors.append(f"xi_t: {error}")
    return row


def theta_upsilon_sweep(params, mu_d_values, xi_values, pd_bracket=(0.65, 1.2),
                        t_bracket=None, mapper=map):
    """theta_Upsilon curves plus xi_pd / xi_t loci over a mu_d grid.

    `mapper` follows the builtin map signature so a process pool can be used.
    """
    worker = partial(_sweep_one, params, list(xi_values), pd_bracket, t_bracket)
    rows = list(mapper(worker, list(mu_d_values)))
    for row in rows:
        logger.info(f"mu_d={row.mu_d:.4f}: xi_pd={row.xi_pd} xi_t={row.xi_t} ({len(row.errors)} errors)")
    return rows
