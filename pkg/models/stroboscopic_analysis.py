# models/stroboscopic_analysis.py
"""eps > 0: the stroboscopic half-map R_eps, symmetric limit cycles by
Newton shooting, continuation in xi with fold / period-doubling detection,
horseshoe diagnostics, full-system simulation and the R_eps -> R0 check."""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import partial
from typing import Optional

import numpy as np

from models.errors import (BranchLostError, EscapeError, GeometryError, ModelParamsError,
                           NumericalError, StictionLabError)
from models.friction_model import TWO_PI, ReducedPoint, Sheet, full_rhs, manifold_x
from models.ode_engine import EventSpec, fd_jacobian, integrate, newton_solve
from models.singular_geometry import (CanardGeometry, canard_geometry, a6_integral,
                                      intersections_gamma_plus_image)
from models.singular_return_map import singular_cycles_from_canard, singular_half_map_R0

logger = logging.getLogger(__name__)

STROBE_TOLS = (1e-9, 1e-11)
ESCAPE_FACTOR = 10.0
MAX_STEPS = 2_000_000
CANARD_THETA = 0.05
NEWTON_TOL = 1e-9


class CycleType(str, Enum):
    STICK_SLIP = "stick-slip"
    PURE_STICK = "pure-stick"
    CANARD = "canard-type"


def _require_eps(params):
    if not params.eps > 0:
        raise ModelParamsError("the stroboscopic map needs eps > 0")


def section_rhs(params, theta_star):
    """Scaled slow-time field on (x, y2) with theta = theta* + xi tau."""
    phi = params.regularization.eval
    mu_d, xi = params.mu_d, params.xi
    inv_eps2 = 1.0 / params.eps ** 2
    sin = math.sin

    def rhs(tau, u):
        return np.array([u[1], (-u[0] - sin(theta_star + xi * tau) - mu_d * phi(u[1])) * inv_eps2])
    return rhs


def _escape_event(params):
    y_max = ESCAPE_FACTOR / params.eps
    return EventSpec(lambda tau, u: abs(u[1]) - y_max, direction=1, terminal=True, name="escape")


def flow_section(params, theta_star, p, span, tols=STROBE_TOLS):
    """Integrate (x, y2) over slow time `span` from theta*; escape raises."""
    _require_eps(params)
    traj, hits = integrate(section_rhs(params, theta_star), np.asarray(p, dtype=float),
                           (0.0, span), tols=tols, events=(_escape_event(params),),
                           max_steps=MAX_STEPS)
    if traj.status == "terminated":
        raise EscapeError(f"orbit escapes |y2| > {ESCAPE_FACTOR / params.eps:g} "
                          f"at tau={traj.t_final:.6g} (xi={params.xi})")
    return traj


def half_map_R_eps(params, theta_star, p, tols=STROBE_TOLS):
    """R_eps = S o Q_eps: flow from theta* to theta* + pi, then the symmetry."""
    traj = flow_section(params, theta_star, p, math.pi / params.xi, tols)
    x, y2 = traj.y_final
    return np.array([-x, -y2])


def full_map_P_eps(params, theta_star, p, tols=STROBE_TOLS):
    return half_map_R_eps(params, theta_star, half_map_R_eps(params, theta_star, p, tols), tols)


# Limit cycles

@dataclass
class LimitCycle:
    x: float
    y2: float
    theta_star: float
    params: object = field(repr=False)
    jacobian: np.ndarray = field(repr=False)
    multipliers: np.ndarray
    P_multipliers: np.ndarray
    classification: CycleType
    max_y: float
    residual: float
    trajectory: dict = field(default_factory=dict, repr=False)  # t, x, y, theta arrays
    symmetric: bool = True

    @property
    def point(self):
        return np.array([self.x, self.y2])

    @property
    def is_attracting(self):
        return bool(np.all(np.abs(self.multipliers) < 1.0))

    def summary(self):
        m = sorted(self.multipliers, key=lambda v: (-abs(v), v.real))
        return {"xi": self.params.xi, "x": self.x, "y2": self.y2, "max_y": self.max_y,
                "mult1_re": float(m[0].real), "mult1_im": float(m[0].imag),
                "mult2_re": float(m[1].real), "mult2_im": float(m[1].imag),
                "class": self.classification.value}


def cycle_trajectory(params, theta_star, p, n=2001, tols=STROBE_TOLS):
    """One full period from the fixed point, as original-scale arrays."""
    span = 2.0 * math.pi / params.xi
    traj = flow_section(params, theta_star, p, span, tols)
    tau = np.concatenate([traj.t, np.linspace(0.0, span, n)])
    tau = np.unique(tau)
    states = traj.evaluate(tau)
    return {"t": tau / params.eps, "x": states[:, 0], "y": params.eps * states[:, 1],
            "theta": theta_star + params.xi * tau, "y2": states[:, 1]}


def classify_cycle(params, trajectory, threshold=None):
    """Canard-type if the orbit creeps along a repelling sheet for a theta
    length above CANARD_THETA; otherwise pure-stick / stick-slip by max |y|."""
    c = math.sqrt(params.eps) if threshold is None else threshold
    y2, y, theta = trajectory["y2"], trajectory["y"], trajectory["theta"]
    creeping = (np.abs(y2) > 1.05 * params.delta) & (np.abs(y) < c)
    dtheta = np.diff(theta)
    repelling = float(np.sum(dtheta[creeping[:-1] & creeping[1:]]))
    if repelling > CANARD_THETA:
        return CycleType.CANARD
    if float(np.max(np.abs(y))) < c:
        return CycleType.PURE_STICK
    return CycleType.STICK_SLIP


def _multipliers(J):
    return np.linalg.eigvals(J).astype(complex)


def find_limit_cycle(params, theta_star, seed, threshold=None, tol=NEWTON_TOL, max_iter=30,
                     P_from_fd=False, tols=STROBE_TOLS):
    """Symmetric limit cycle as a fixed point of R_eps by damped Newton."""
    _require_eps(params)

    def residual(v):
        return half_map_R_eps(params, theta_star, v, tols) - v

    result = newton_solve(residual, np.asarray(seed, dtype=float), tol=tol, max_iter=max_iter)
    J = result.jacobian + np.eye(2)
    multipliers = _multipliers(J)
    if P_from_fd:
        P_multipliers = _multipliers(
            fd_jacobian(lambda v: full_map_P_eps(params, theta_star, v, tols), result.root))
    else:
        P_multipliers = _multipliers(J @ J)
    trajectory = cycle_trajectory(params, theta_star, result.root, tols=tols)
    cycle = LimitCycle(
        x=float(result.root[0]), y2=float(result.root[1]), theta_star=theta_star, params=params,
        jacobian=J, multipliers=multipliers, P_multipliers=P_multipliers,
        classification=classify_cycle(params, trajectory, threshold),
        max_y=float(np.max(np.abs(trajectory["y"]))), residual=result.residual_norm,
        trajectory=trajectory,
    )
    logger.debug(f"limit cycle at xi={params.xi}: ({cycle.x:.6f}, {cycle.y2:.6f}) "
                 f"{cycle.classification.value}, |mult|={np.abs(multipliers)}")
    return cycle


def symmetry_defect(cycle, samples=20):
    """max over sampled phases of |state(t + T/2) - S state(t)|."""
    traj = cycle.trajectory
    t = traj["t"]
    half = 0.5 * (t[-1] - t[0])
    phases = np.linspace(t[0], t[0] + half, samples, endpoint=False)
    x_a, y_a = np.interp(phases, t, traj["x"]), np.interp(phases, t, traj["y"])
    x_b, y_b = np.interp(phases + half, t, traj["x"]), np.interp(phases + half, t, traj["y"])
    return float(max(np.max(np.abs(x_b + x_a)), np.max(np.abs(y_b + y_a))))


def orbit_distance(a, b, chunk=512):
    """Hausdorff distance between two sampled (x, y) orbits."""
    A = np.column_stack([a["x"], a["y"]])
    B = np.column_stack([b["x"], b["y"]])

    def directed(P, Q):
        worst = 0.0
        for start in range(0, len(P), chunk):
            d = np.linalg.norm(P[start:start + chunk, None, :] - Q[None, :, :], axis=2)
            worst = max(worst, float(np.max(np.min(d, axis=1))))
        return worst
    return max(directed(A, B), directed(B, A))


def seed_on_manifold(params, theta_star, y2):
    """(x, y2) on the critical manifold above the section."""
    return np.array([manifold_x(params, ReducedPoint(y2, theta_star)), y2])


def seeds_from_singular_cycles(params, theta_star, cycles):
    """y2 where each singular cycle crosses the section theta* on C_a (either half)."""
    seeds = []
    for cycle in cycles:
        for half in (cycle.half, cycle.other_half):
            for arc in half.arcs:
                if arc.sheet is not Sheet.ATTRACTING:
                    continue
                curve = arc.curve
                lo, hi = float(curve.theta.min()), float(curve.theta.max())
                k = math.ceil((lo - theta_star) / TWO_PI)
                theta = theta_star + k * TWO_PI
                if lo <= theta <= hi and np.all(np.diff(curve.theta) > 0):
                    seeds.append(float(curve.y2_at(theta)))
                    break
            else:
                continue
            break
    return seeds


# Continuation

class EventKind(str, Enum):
    FOLD = "fold"
    PERIOD_DOUBLING = "period-doubling"


@dataclass
class BranchPoint:
    xi: float
    x: float
    y2: float
    max_y: float
    multipliers: np.ndarray
    classification: CycleType
    mode: str = "natural"

    @property
    def u(self):
        return np.array([self.x, self.y2, self.xi])

    @property
    def fold_test(self):
        return float(np.real(np.prod(self.multipliers - 1.0)))

    @property
    def pd_test(self):
        return float(np.real(np.prod(self.multipliers + 1.0)))

    def to_row(self):
        m = sorted(self.multipliers, key=lambda v: (-abs(v), v.real))
        return {"xi": self.xi, "x": self.x, "y2": self.y2, "max_y": self.max_y,
                "mult1_re": float(m[0].real), "mult1_im": float(m[0].imag),
                "mult2_re": float(m[1].real), "mult2_im": float(m[1].imag),
                "class": self.classification.value}


@dataclass
class BifurcationEvent:
    kind: EventKind
    xi: float
    multipliers: list
    bracket: tuple

    def to_dict(self):
        return {"kind": self.kind.value, "xi": self.xi, "bracket": list(self.bracket),
                "multipliers": [[float(m.real), float(m.imag)] for m in self.multipliers]}


@dataclass
class BifurcationDiagram:
    theta_star: float
    eps: float
    branch: list = field(default_factory=list)
    events: list = field(default_factory=list)
    status: str = "completed"

    def events_of(self, kind):
        return [e for e in self.events if e.kind is EventKind(kind)]

    def to_rows(self):
        return [p.to_row() for p in self.branch]

    def to_dict(self):
        return {"theta_star": self.theta_star, "eps": self.eps, "status": self.status,
                "points": len(self.branch), "events": [e.to_dict() for e in self.events]}


class _Corrector:
    """Shared R_eps machinery of a branch: residuals in (x, y2) at fixed xi or
    in (x, y2, xi) on a hyperplane."""

    def __init__(self, params, theta_star, threshold, tol, tols=STROBE_TOLS):
        self.params = params
        self.theta_star = theta_star
        self.threshold = threshold
        self.tol = tol
        self.tols = tols

    def at_xi(self, xi, seed):
        p = self.params.with_(xi=float(xi))
        result = newton_solve(lambda v: half_map_R_eps(p, self.theta_star, v, self.tols) - v, seed,
                              tol=self.tol, max_iter=12)
        return self._point(xi, result.root, result.jacobian + np.eye(2), "natural")

    def on_plane(self, u_pred, normal):
        normal = normal / np.linalg.norm(normal)

        def residual(u):
            p = self.params.with_(xi=float(u[2]))
            r = half_map_R_eps(p, self.theta_star, u[:2], self.tols) - u[:2]
            return np.concatenate([r, [normal @ (u - u_pred)]])
        result = newton_solve(residual, u_pred, tol=self.tol, max_iter=12)
        u = result.root
        J = result.jacobian[:2, :2] + np.eye(2)
        return self._point(u[2], u[:2], J, "arclength")

    def _point(self, xi, v, J, mode):
        p = self.params.with_(xi=float(xi))
        trajectory = cycle_trajectory(p, self.theta_star, v, n=801, tols=self.tols)
        return BranchPoint(
            xi=float(xi), x=float(v[0]), y2=float(v[1]),
            max_y=float(np.max(np.abs(trajectory["y"]))), multipliers=_multipliers(J),
            classification=classify_cycle(p, trajectory, self.threshold), mode=mode)


def _locate_event(corrector, a, b, test, iterations=20, xi_tol=1e-5):
    """Bisection between branch points a, b on the sign of `test`, each
    midpoint corrected on the hyperplane through it orthogonal to b - a."""
    ta = test(a)
    for _ in range(iterations):
        if abs(b.xi - a.xi) < xi_tol:
            break
        direction = b.u - a.u
        mid_pred = 0.5 * (a.u + b.u)
        try:
            mid = corrector.on_plane(mid_pred, direction)
        except NumericalError as error:
            logger.debug(f"event bisection stopped: {error}")
            break
        if (test(mid) > 0) == (ta > 0):
            a, ta = mid, test(mid)
        else:
            b = mid
    return a, b


def _record_event(diagram, corrector, kind, a, b):
    test = (lambda q: q.fold_test) if kind is EventKind.FOLD else (lambda q: q.pd_test)
    lo, hi = _locate_event(corrector, a, b, test)
    xi = 0.5 * (lo.xi + hi.xi)
    event = BifurcationEvent(kind, float(xi), list(hi.multipliers), (lo.xi, hi.xi))
    diagram.events.append(event)
    logger.info(f"{kind.value} at xi={xi:.5f} (multipliers {np.round(hi.multipliers, 4)})")


def continue_branch(params, theta_star, xi_range, seed, step=None, min_step=1e-6, max_step=None,
                    max_points=400, threshold=None, tol=NEWTON_TOL, fold_margin=0.05,
                    tols=STROBE_TOLS):
    """Continue a symmetric cycle in xi across xi_range.

    Natural-parameter steps with a secant predictor and step halving; near a
    multiplier +1 (or when natural steps fail at the floor) the continuation
    switches to pseudo-arclength in (x, y2, xi) and stays there.
    """
    _require_eps(params)
    xi_start, xi_stop = float(xi_range[0]), float(xi_range[1])
    if xi_start == xi_stop:
        raise ValueError("xi_range must be nondegenerate")
    sign = 1.0 if xi_stop > xi_start else -1.0
    lo_xi, hi_xi = min(xi_start, xi_stop), max(xi_start, xi_stop)
    step = step or abs(xi_stop - xi_start) / 50.0
    max_step = max_step or 4.0 * step
    corrector = _Corrector(params, theta_star, threshold, tol, tols)
    diagram = BifurcationDiagram(theta_star=theta_star, eps=params.eps)

    current = corrector.at_xi(xi_start, np.asarray(seed, dtype=float))
    diagram.branch.append(current)
    previous = None
    mode = "natural"
    ds = step
    while len(diagram.branch) < max_points:
        try:
            if mode == "natural":
                xi_next = current.xi + sign * step
                if previous is None:
                    guess = current.u[:2]
                else:
                    guess = current.u[:2] + (current.u[:2] - previous.u[:2]) * (
                        (xi_next - current.xi) / (current.xi - previous.xi))
                nxt = corrector.at_xi(xi_next, guess)
            else:
                tangent = current.u - previous.u
                tangent /= np.linalg.norm(tangent)
                nxt = corrector.on_plane(current.u + ds * tangent, tangent)
        except NumericalError as error:
            if mode == "natural":
                step *= 0.5
                if step < min_step:
                    if previous is None:
                        raise BranchLostError(f"branch lost at xi={current.xi:.6f}: {error}")
                    logger.info(f"natural steps failed at xi={current.xi:.6f}; switching to arclength")
                    mode, ds = "arclength", float(np.linalg.norm(current.u - previous.u))
                continue
            ds *= 0.5
            if ds < min_step:
                diagram.status = "branch-lost"
                logger.warning(f"branch lost at xi={current.xi:.6f}: {error}")
                break
            continue

        for kind, test in ((EventKind.FOLD, lambda q: q.fold_test), (EventKind.PERIOD_DOUBLING, lambda q: q.pd_test)):
            if test(current) * test(nxt) < 0:
                _record_event(diagram, corrector, kind, current, nxt)
        if mode == "arclength" and previous is not None:
            if (current.xi - previous.xi) * (nxt.xi - current.xi) < 0 and not any(
                    e.kind is EventKind.FOLD and min(e.bracket) <= current.xi + 1e-9 and max(e.bracket) >= current.xi - 1e-9
                    for e in diagram.events):
                diagram.events.append(BifurcationEvent(EventKind.FOLD, current.xi, list(current.multipliers),
                                                       (min(previous.xi, nxt.xi), current.xi)))
                logger.info(f"fold (turning point) at xi~{current.xi:.5f}")

        previous, current = current, nxt
        diagram.branch.append(current)
        if not lo_xi <= current.xi <= hi_xi:
            break
        if mode == "natural":
            step = min(step * 1.5, max_step)
            near_fold = any(abs(m.imag) < 1e-9 and abs(m.real - 1.0) < fold_margin
                            for m in current.multipliers)
            if near_fold:
                logger.info(f"multiplier near +1 at xi={current.xi:.6f}; switching to arclength")
                mode, ds = "arclength", float(np.linalg.norm(current.u - previous.u))
        else:
            ds = min(ds * 1.5, max_step)
    logger.info(f"branch: {len(diagram.branch)} points, {len(diagram.events)} events, status={diagram.status}")
    return diagram


# Horseshoe evidence

@dataclass
class EvidenceItem:
    ok: bool
    value: object = None
    error: Optional[str] = None

    def to_dict(self):
        return {"ok": self.ok, "value": self.value, "error": self.error}


@dataclass
class EvidenceReport:
    xi: float
    eps: float
    theta_star: Optional[float] = None
    items: dict = field(default_factory=dict)

    def to_dict(self):
        return {"xi": self.xi, "eps": self.eps, "theta_star": self.theta_star,
                "items": {k: v.to_dict() for k, v in self.items.items()}}


def _escape_time(params, theta_star, center, width, max_iter, tols, y2):
    """Number of R_eps iterates before leaving |y2 - center| <= width."""
    v = seed_on_manifold(params, theta_star, float(y2))
    for n in range(max_iter):
        try:
            v = half_map_R_eps(params, theta_star, v, tols)
        except NumericalError:
            return n
        if abs(v[1] - center) > width:
            return n
    return max_iter


def count_plateaus(times):
    """Number of maximal runs of equal escape time."""
    times = np.asarray(times)
    if times.size == 0:
        return 0
    return int(1 + np.count_nonzero(np.diff(times)))


def _section_for(cycles):
    """A section on C_a crossed by both canard cycles before z-."""
    theta_hi = min(c.slow_arcs[0].theta.max() for c in cycles)
    theta_lo = max(c.theta_range[0] for c in cycles)
    return 0.5 * (theta_lo + theta_hi)


def horseshoe_evidence(params, xi=None, n_grid=16, depths=3, max_iter=8, width=None,
                       period2_seeds=6, tols=STROBE_TOLS, mapper=map):
    """Diagnostics for the canard-induced horseshoe; failures are recorded per item."""
    _require_eps(params)
    p = params if xi is None else params.with_(xi=float(xi))
    report = EvidenceReport(xi=p.xi, eps=p.eps)
    geometry: Optional[CanardGeometry] = None
    cycles = []

    try:
        geometry = canard_geometry(p)
        crossings = [c for c in intersections_gamma_plus_image(p, geometry) if c.mechanism == "G"]
        report.items["intersections"] = EvidenceItem(
            ok=len(crossings) == 2 and all(c.transverse for c in crossings),
            value={"count": len(crossings), "angles": [c.angle for c in crossings],
                   "transverse": [c.transverse for c in crossings]})
    except StictionLabError as error:
        report.items["intersections"] = EvidenceItem(False, error=str(error))

    try:
        if geometry is None:
            raise GeometryError("canard geometry unavailable")
        cycles = [c for c in singular_cycles_from_canard(p, geometry) if c.crossing.mechanism == "G"]
        if len(cycles) < 2:
            raise GeometryError(f"need two canard cycles, found {len(cycles)}")
        gamma_1, gamma_2 = cycles[0], cycles[-1]
        value = a6_integral(p, gamma_2, theta_lower=gamma_1.jump_angle - math.pi)
        report.items["a6_integral"] = EvidenceItem(True, {"value": value, "negative": value < 0,
                                                          "theta_1": gamma_1.jump_angle,
                                                          "theta_2": gamma_2.jump_angle})
    except StictionLabError as error:
        report.items["a6_integral"] = EvidenceItem(False, error=str(error))

    period_one = []
    center = None
    try:
        if len(cycles) < 2:
            raise GeometryError("no singular canard cycles to seed from")
        theta_star = _section_for(cycles)
        report.theta_star = theta_star
        center = float(cycles[0].slow_arcs[0].y2_at(theta_star))
        offsets = np.array([0.0, -1e-3, 1e-3, -1e-2, 1e-2, -3e-2, 3e-2]) * p.delta
        for off in offsets:
            try:
                cycle = find_limit_cycle(p, theta_star, seed_on_manifold(p, theta_star, center + off),
                                         tols=tols)
            except NumericalError:
                continue
            if all(np.max(np.abs(cycle.point - c.point)) > 1e-6 for c in period_one):
                period_one.append(cycle)
        saddle = [c for c in period_one if np.any(np.abs(c.multipliers) > 1.0)]
        report.items["period_one"] = EvidenceItem(
            ok=len(period_one) >= 2 and bool(saddle),
            value=[dict(c.summary(), abs_multipliers=[float(abs(m)) for m in c.multipliers])
                   for c in period_one])
    except StictionLabError as error:
        report.items["period_one"] = EvidenceItem(False, error=str(error))

    boundaries = []
    try:
        if center is None:
            raise GeometryError("no section through the canard strip")
        w = width or 0.05 * p.delta
        grid = np.linspace(center - w, center + w, n_grid * 2 ** (depths - 1) + 1)
        worker = partial(_escape_time, p, report.theta_star, center, 2.0 * w, max_iter, tols)
        times = np.array(list(mapper(worker, grid)))
        counts = []
        for d in range(depths):
            stride = 2 ** (depths - 1 - d)
            counts.append(count_plateaus(times[::stride]))
        changes = np.nonzero(np.diff(times))[0]
        boundaries = [0.5 * (grid[i] + grid[i + 1]) for i in changes]
        report.items["escape_time"] = EvidenceItem(
            ok=all(b > a for a, b in zip(counts, counts[1:])),
            value={"plateau_counts": counts, "max_iter": max_iter, "grid_points": int(grid.size)})
    except StictionLabError as error:
        report.items["escape_time"] = EvidenceItem(False, error=str(error))

    try:
        if not boundaries:
            raise GeometryError("no plateau boundaries to seed period-2 search")
        found = None
        for y2 in boundaries[:period2_seeds]:
            seed = seed_on_manifold(p, report.theta_star, y2)
            try:
                result = newton_solve(lambda v: full_map_P_eps(p, report.theta_star, v, tols) - v, seed,
                                      tol=NEWTON_TOL, max_iter=20)
            except NumericalError:
                continue
            v = result.root
            if np.max(np.abs(half_map_R_eps(p, report.theta_star, v, tols) - v)) > 1e-6 and all(
                    np.max(np.abs(v - c.point)) > 1e-6 for c in period_one):
                found = v
                break
        report.items["period_two"] = EvidenceItem(
            ok=found is not None, value=None if found is None else [float(found[0]), float(found[1])])
    except StictionLabError as error:
        report.items["period_two"] = EvidenceItem(False, error=str(error))
    return report


# Simulation

@dataclass
class SimulationResult:
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    theta: np.ndarray
    tags: np.ndarray
    threshold: float
    stats: dict = field(default_factory=dict)

    def rows(self):
        return [(float(a), float(b), float(c), float(d), str(e))
                for a, b, c, d, e in zip(self.t, self.x, self.y, self.theta, self.tags)]


def phase_tags(y, threshold):
    tags = np.full(y.shape, "stick", dtype=object)
    tags[y > threshold] = "slip+"
    tags[y < -threshold] = "slip-"
    return tags


def simulate(params, s0, t_span, threshold=None, dt_out=0.05, tols=(1e-8, 1e-10)):
    """Full-system trajectory in original time with stick / slip tags."""
    _require_eps(params)
    c = math.sqrt(params.eps) if threshold is None else threshold
    traj, _ = integrate(full_rhs(params), s0.as_array(), t_span, tols=tols, max_steps=50_000_000)
    n = max(2, int(abs(t_span[1] - t_span[0]) / dt_out) + 1)
    t = np.linspace(t_span[0], traj.t_final, n)
    states = traj.evaluate(t)
    result = SimulationResult(t=t, x=states[:, 0], y=states[:, 1], theta=states[:, 2],
                              tags=phase_tags(states[:, 1], c), threshold=c, stats=traj.stats)
    logger.debug(f"simulate {t_span}: {traj.stats}")
    return result


def count_slip_excursions(result, t_from=None, t_to=None):
    """Maximal runs of slip tags (either direction) inside [t_from, t_to]."""
    mask = np.ones(result.t.shape, dtype=bool)
    if t_from is not None:
        mask &= result.t >= t_from
    if t_to is not None:
        mask &= result.t <= t_to
    slipping = np.array([tag != "stick" for tag in result.tags[mask]])
    if slipping.size == 0:
        return 0
    starts = np.count_nonzero(slipping[1:] & ~slipping[:-1])
    return int(starts + (1 if slipping[0] else 0))


def slips_per_period(result, params, periods=2):
    """Slip excursions per forcing period averaged over the last `periods` periods."""
    period = 2.0 * math.pi / params.omega
    t_end = result.t[-1]
    t_from = t_end - periods * period
    counts = []
    for k in range(periods):
        a = t_from + k * period
        counts.append(count_slip_excursions(result, a, a + period))
    return float(np.mean(counts))


# Convergence of R_eps to R0

def half_map_convergence(params, theta_star, y2_points, eps_values):
    """sup-norm distance between R_eps and R0 at points of C_a above theta*."""
    rows = []
    for eps in eps_values:
        p = params.with_(eps=float(eps))
        errors = []
        for y2 in y2_points:
            y_out, _ = singular_half_map_R0(p, theta_star, float(y2))
            x_out = manifold_x(p, ReducedPoint(y_out, theta_star))
            image = half_map_R_eps(p, theta_star, seed_on_manifold(p, theta_star, float(y2)))
            errors.append(max(abs(image[0] - x_out), abs(image[1] - y_out)))
        rows.append({"eps": float(eps), "errors": errors, "sup_error": float(max(errors))})
        logger.info(f"eps={eps:g}: sup |R_eps - R0| = {max(errors):.3e}")
    return rows
