# models/singular_return_map.py
"""The eps = 0 half-return map R0 on the attracting sheet, its fixed points
and the singular cycles assembled from them or from canard crossings."""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property, partial
from typing import NamedTuple, Optional

import numpy as np

from models.errors import (EntersFunnelError, GeometryError, HitFoldedSaddleError,
                           InadmissiblePointError, NumericalError, ReturnMapError)
from models.friction_model import ReducedPoint, Sheet, TWO_PI, reduced_desing_rhs
from models.ode_engine import EventSpec, bisect_root, integrate
from models.singular_geometry import (PlanarCurve, SEED_OFFSET, Side, _saddle_directions,
                                      canard_geometry, folded_saddle, folded_singularities,
                                      intersections_gamma_plus_image, jump_set_J, map_G, map_L,
                                      theta_minus, wrap_angle, y2_minus)

logger = logging.getLogger(__name__)

R0_TOLS = (1e-11, 1e-12)
S_MAX = 1e3
SADDLE_TOL = 1e-8
FUNNEL_EVENT_RADIUS = 1e-5
ARC_EDGE = 1e-2
FD_STEP = 1e-6
CLOSURE_TOL = 1e-5  # second order in the canard mesh edge


class Mechanism(str, Enum):
    G_MINUS = "G-"
    G_PLUS = "G+"
    L_MINUS = "L-"
    L_PLUS = "L+"

    @property
    def mirrored(self):
        return {Mechanism.G_MINUS: Mechanism.G_PLUS, Mechanism.G_PLUS: Mechanism.G_MINUS,
                Mechanism.L_MINUS: Mechanism.L_PLUS, Mechanism.L_PLUS: Mechanism.L_MINUS}[self]

    @property
    def route(self):
        return self.value[0]


class CycleClass(str, Enum):
    PURE_STICK = "pure-stick"
    STICK_SLIP = "stick-slip"
    STICK_SLIP_CANARD = "stick-slip-canard"
    CANARD_G = "canard-stick-slip"
    CANARD_L = "canard-pure-stick"


def _mirror_sheet(sheet):
    return {Sheet.REPELLING_MINUS: Sheet.REPELLING_PLUS,
            Sheet.REPELLING_PLUS: Sheet.REPELLING_MINUS}.get(sheet, sheet)


@dataclass
class SlowArc:
    curve: PlanarCurve
    sheet: Sheet = Sheet.ATTRACTING
    canard: bool = False

    def symmetric(self):
        return SlowArc(self.curve.symmetric(), _mirror_sheet(self.sheet), self.canard)

    def to_record(self):
        return {"kind": "slow_arc", "sheet": self.sheet.value, "canard": self.canard,
                "nodes": len(self.curve),
                "start": [self.curve.start.y2, self.curve.start.theta],
                "end": [self.curve.end.y2, self.curve.end.theta]}


@dataclass
class Jump:
    source: ReducedPoint
    target: ReducedPoint
    mechanism: Mechanism

    def symmetric(self):
        return Jump(ReducedPoint(-self.source.y2, self.source.theta + math.pi),
                    ReducedPoint(-self.target.y2, self.target.theta + math.pi),
                    self.mechanism.mirrored)

    def to_record(self):
        return {"kind": "jump", "mechanism": self.mechanism.value,
                "source": [self.source.y2, self.source.theta],
                "target": [self.target.y2, self.target.theta]}


@dataclass
class Itinerary:
    """Alternating slow arcs and jumps from theta_start to theta_end."""
    segments: list
    theta_start: float
    theta_end: float

    @property
    def arcs(self):
        return [s for s in self.segments if isinstance(s, SlowArc)]

    @property
    def jumps(self):
        return [s for s in self.segments if isinstance(s, Jump)]

    @property
    def start(self):
        first = self.segments[0]
        return first.curve.start if isinstance(first, SlowArc) else first.source

    @property
    def end(self):
        last = self.segments[-1]
        return last.curve.end if isinstance(last, SlowArc) else last.target

    def symmetric(self):
        return Itinerary([s.symmetric() for s in self.segments],
                         self.theta_start + math.pi, self.theta_end + math.pi)

    def to_records(self):
        return [s.to_record() for s in self.segments]


@dataclass
class SingularCycle:
    """Symmetric eps = 0 cycle: one half itinerary and its symmetric copy."""
    half: Itinerary
    slow_arcs: list
    theta_range: tuple  # (jump angle - pi, jump angle) for canard cycles
    jump_angles: list
    crossing: Optional[object] = None
    canard_role: Optional[str] = None  # "c" or "ssc" for canard cycles
    classification: Optional[CycleClass] = None

    def __post_init__(self):
        if self.classification is None:
            self.classification = classify_singular_cycle(self)

    @cached_property
    def other_half(self):
        return self.half.symmetric()

    def closure_defect(self):
        """Distance between the end of the half and the start of its mirror, theta mod 2 pi."""
        a, b = self.half.end, self.other_half.start
        return math.hypot(a.y2 - b.y2, wrap_angle(a.theta - b.theta))

    @property
    def jump_angle(self):
        return self.theta_range[1]

    def to_dict(self):
        return {"classification": self.classification.value,
                "theta_range": list(self.theta_range),
                "jump_angles": list(self.jump_angles),
                "canard_role": self.canard_role,
                "closure_defect": self.closure_defect(),
                "itinerary": self.half.to_records()}

    def to_rows(self):
        rows = []
        for label, half in (("half_1", self.half), ("half_2", self.other_half)):
            for arc in half.arcs:
                rows.extend((label, arc.sheet.value, y2, th)
                            for y2, th in zip(arc.curve.y2, arc.curve.theta))
        return rows


def classify_singular_cycle(cycle):
    """Tag a singular cycle by its mechanism usage."""
    canard = any(arc.canard for arc in cycle.half.arcs)
    jumps = cycle.half.jumps
    if canard:
        if any(j.mechanism.route == "L" for j in jumps):
            return CycleClass.CANARD_L
        if cycle.canard_role == "ssc":
            return CycleClass.STICK_SLIP_CANARD
        return CycleClass.CANARD_G
    return CycleClass.STICK_SLIP if jumps else CycleClass.PURE_STICK


# R0

def _non_saddles(params):
    if not params.xi > params.delta:
        return []
    return [fs.location for fs in folded_singularities(params) if not fs.is_saddle]


def _saddles(params):
    if not params.xi > params.delta:
        return []
    return [folded_saddle(params, Side.MINUS), folded_saddle(params, Side.PLUS)]


def _distance(p, q):
    return math.hypot(p.y2 - q.y2, wrap_angle(p.theta - q.theta))


def singular_half_map_R0(params, theta_star, y2, max_jumps=16, s_max=S_MAX):
    """R0: reduced flow on C_a from theta* to theta* + pi with G jumps at J,
    followed by the symmetry. Returns (y2_out, itinerary)."""
    d = params.delta
    if not -d < y2 < d:
        raise InadmissiblePointError(f"R0 needs a point on C_a, got y2={y2}")
    theta_end = theta_star + math.pi
    saddles = _saddles(params)
    funnels = _non_saddles(params)
    level = y2_minus(params)

    def funnel_gap(s, u):
        p = ReducedPoint(u[0], u[1])
        return min(_distance(p, q) for q in funnels) - FUNNEL_EVENT_RADIUS

    events = [
        EventSpec(lambda s, u: u[1] - theta_end, direction=1, terminal=True, name="end"),
        EventSpec(lambda s, u: u[0] + d, direction=-1, terminal=True, name="fold_minus"),
        EventSpec(lambda s, u: u[0] - d, direction=1, terminal=True, name="fold_plus"),
    ]
    if funnels:
        events.append(EventSpec(funnel_gap, direction=-1, terminal=True, name="funnel"))
    rhs = reduced_desing_rhs(params)
    state = np.array([y2, theta_star], dtype=float)
    segments = []
    budget = s_max
    for _ in range(max_jumps + 1):
        traj, hits = integrate(rhs, state, (0.0, budget), tols=R0_TOLS, events=events,
                               max_steps=200000)
        nodes = traj.evaluate(traj.dense_times(ARC_EDGE))
        nodes[-1] = traj.y_final
        segments.append(SlowArc(PlanarCurve(nodes[:, 0], nodes[:, 1], "slow_arc")))
        hit = hits[-1] if hits and hits[-1].terminal else None
        if hit is None:
            raise EntersFunnelError("orbit stalls on C_a before reaching theta* + pi",
                                    theta=theta_star, y2=y2)
        p = ReducedPoint(float(hit.state[0]), float(hit.state[1]))
        if hit.name == "end":
            return -p.y2, Itinerary(segments, theta_star, theta_end)
        if hit.name == "funnel":
            raise EntersFunnelError(f"orbit enters a folded node/focus funnel at theta={p.theta:.6f}",
                                    theta=theta_star, y2=y2)
        if any(_distance(p, z) < SADDLE_TOL for z in saddles):
            raise HitFoldedSaddleError(f"orbit reaches the folded saddle at theta={p.theta:.9f}",
                                       theta=theta_star, y2=y2)
        side = Side.MINUS if hit.name == "fold_minus" else Side.PLUS
        if not jump_set_J(params, side).contains(p.theta):
            raise ReturnMapError(f"fold contact outside the jump set at theta={p.theta:.6f}",
                                 theta=theta_star, y2=y2)
        target = ReducedPoint(level if side is Side.MINUS else -level, p.theta)
        segments.append(Jump(p, target, Mechanism.G_MINUS if side is Side.MINUS else Mechanism.G_PLUS))
        state = np.array([target.y2, target.theta])
        budget -= traj.t_final
        if budget <= 0:
            break
    raise EntersFunnelError(f"more than {max_jumps} jumps within half a period",
                            theta=theta_star, y2=y2)


def singular_full_map_P0(params, theta_star, y2):
    """Full-period singular map P0 = R0 o R0."""
    y_half, _ = singular_half_map_R0(params, theta_star, y2)
    y_full, _ = singular_half_map_R0(params, theta_star, y_half)
    return y_full


def canard_section_crossing(params, theta_star, side=Side.MINUS, seed_offset=SEED_OFFSET):
    """y2 where gamma_- (or gamma_+), flowed backward from its folded saddle,
    first meets theta = theta* (mod 2 pi); None if it leaves C_a first."""
    if Side(side) is Side.PLUS:
        value = canard_section_crossing(params, theta_star + math.pi, Side.MINUS, seed_offset)
        return None if value is None else -value
    z = folded_saddle(params, Side.MINUS)
    offset = (z.theta - theta_star) % TWO_PI
    if offset < 1e-14:
        return z.y2
    target = z.theta - offset
    v_s, _ = _saddle_directions(params)
    d = params.delta
    seed = [z.y2 - seed_offset * v_s[0], z.theta - seed_offset * v_s[1]]
    events = (
        EventSpec(lambda s, u: u[1] - target, direction=-1, terminal=True, name="section"),
        EventSpec(lambda s, u: u[0] - d, direction=1, terminal=True, name="fold_plus"),
        EventSpec(lambda s, u: u[0] + d, direction=-1, terminal=True, name="fold_minus"),
    )
    _, hits = integrate(reduced_desing_rhs(params, reverse=True), seed, (0.0, S_MAX),
                        tols=R0_TOLS, events=events, max_steps=400000)
    if hits and hits[-1].terminal and hits[-1].name == "section":
        return float(hits[-1].state[0])
    return None


def stick_slip_interval(params, theta_star):
    """K = (-delta, y2_c) on the section theta*."""
    y2_c = canard_section_crossing(params, theta_star, Side.MINUS)
    return (-params.delta, params.delta if y2_c is None else y2_c)


def pure_stick_interval(params, theta_star=None):
    """K = (-delta, b) on the section theta_-, b from gamma_+ or delta."""
    theta_star = theta_minus(params) if theta_star is None else theta_star
    if not params.xi > params.delta:
        return (-params.delta, params.delta)
    b = canard_section_crossing(params, theta_star, Side.PLUS)
    return (-params.delta, params.delta if b is None else b)


class FixedPoint(NamedTuple):
    y2: float
    slope: float


def _R0_value(params, theta_star, y2):
    try:
        return singular_half_map_R0(params, theta_star, float(y2))[0]
    except (GeometryError, NumericalError):
        return None


def R0_derivative(params, theta_star, y2, h=FD_STEP):
    up, _ = singular_half_map_R0(params, theta_star, y2 + h)
    down, _ = singular_half_map_R0(params, theta_star, y2 - h)
    return (up - down) / (2.0 * h)


def find_R0_fixed_points(params, theta_star, search_interval=None, n_scan=200, tol=1e-10,
                         mapper=map):
    """Fixed points of R0 from a sign-change scan of V = R0(y2) - y2.

    Only + to - sign changes are roots (V is decreasing where R0 is
    continuous); brackets straddling a discontinuity are discarded.
    """
    d = params.delta
    lo, hi = search_interval or (-d, d)
    margin = 1e-9 * (hi - lo)
    grid = np.linspace(lo + margin, hi - margin, n_scan)
    values = list(mapper(partial(_R0_value, params, theta_star), grid))
    roots = []
    for a, b, ra, rb in zip(grid, grid[1:], values, values[1:]):
        if ra is None or rb is None:
            continue
        va, vb = ra - a, rb - b
        if not (va > 0 >= vb):
            continue

        def V(s):
            value = _R0_value(params, theta_star, s)
            if value is None:
                raise ReturnMapError("discontinuity inside bracket", theta=theta_star, y2=s)
            return value - s
        try:
            root = bisect_root(V, (a, b), tol=tol)
            if abs(V(root)) > 1e-7:
                continue
            slope = R0_derivative(params, theta_star, root)
        except (GeometryError, NumericalError) as error:
            logger.debug(f"discarding bracket ({a:.6f}, {b:.6f}): {error}")
            continue
        roots.append(FixedPoint(float(root), float(slope)))
    logger.debug(f"R0 at theta*={theta_star:.6f}, xi={params.xi}: {len(roots)} fixed points")
    return roots


def R0_continuity_intervals(params, theta_star, n_scan=200, mapper=map):
    """Maximal runs of the scan grid on which R0 is defined and has no jumps."""
    d = params.delta
    grid = np.linspace(-d + 1e-9, d - 1e-9, n_scan)
    values = list(mapper(partial(_R0_value, params, theta_star), grid))
    runs, current = [], []
    spacing = grid[1] - grid[0]
    for y, v in zip(grid, values):
        if v is None or (current and abs(v - current[-1][1]) > 10.0 * spacing):
            if len(current) >= 2:
                runs.append(current)
            current = [] if v is None else [(y, v)]
            continue
        current.append((y, v))
    if len(current) >= 2:
        runs.append(current)
    return [np.array(run) for run in runs]


# Singular cycles

def singular_cycle_from_fixed_point(params, theta_star, y2_star):
    """Singular cycle through a fixed point of R0 (pure-stick or stick-slip)."""
    _, itinerary = singular_half_map_R0(params, theta_star, y2_star)
    arcs = [arc.curve for arc in itinerary.arcs]
    jumps = [j.source.theta for j in itinerary.jumps]
    return SingularCycle(half=itinerary, slow_arcs=arcs,
                         theta_range=(theta_star, theta_star + math.pi), jump_angles=jumps)


def _canard_role(crossing):
    """Canard role from the crossing direction: ssc where G-(gamma_tilde_-), followed
    away from z-, passes from below gamma_+ to above it (the branch born from the
    stick-slip cycle at the period doubling); c for the other crossings."""
    return "ssc" if crossing.mechanism == "G" and crossing.upward else "c"


def _cycle_from_crossing(params, geometry, crossing):
    theta_q = crossing.point.theta
    th_minus = theta_minus(params)
    gamma = geometry.gamma_minus
    tilde = geometry.gamma_minus_tilde
    if not gamma.theta.min() <= theta_q - math.pi <= th_minus <= theta_q <= tilde.theta.max():
        raise GeometryError(f"crossing at theta={theta_q:.6f} is not reachable along the canard")
    source = ReducedPoint(float(tilde.y2_at(theta_q)), theta_q)
    if crossing.mechanism == "G":
        target, mechanism = map_G(params, Side.MINUS, source), Mechanism.G_MINUS
    else:
        target, mechanism = map_L(params, Side.MINUS, source, allow_fold=True), Mechanism.L_MINUS
    on_a = gamma.clipped(theta_q - math.pi, th_minus)
    on_r = tilde.clipped(th_minus, theta_q)
    segments = [SlowArc(on_a, Sheet.ATTRACTING, canard=True),
                SlowArc(on_r, Sheet.REPELLING_MINUS, canard=True),
                Jump(source, target, mechanism)]
    half = Itinerary(segments, theta_q - math.pi, theta_q)
    cycle = SingularCycle(half=half, slow_arcs=[on_a, on_r],
                          theta_range=(theta_q - math.pi, theta_q), jump_angles=[theta_q],
                          crossing=crossing, canard_role=_canard_role(crossing))
    defect = cycle.closure_defect()
    if defect > CLOSURE_TOL:
        raise GeometryError(f"canard cycle at theta={theta_q:.6f} does not close: defect {defect:.3g}")
    return cycle


def singular_cycles_from_canard(params, geometry=None):
    """Symmetric singular cycles through the folded saddles, one per
    transverse crossing of gamma_+ with an image curve of gamma_tilde_-."""
    geometry = geometry or canard_geometry(params)
    crossings = [c for c in intersections_gamma_plus_image(params, geometry) if c.transverse]
    cycles = []
    for crossing in crossings:
        try:
            cycles.append(_cycle_from_crossing(params, geometry, crossing))
        except GeometryError as error:
            logger.warning(f"skipping crossing at theta={crossing.point.theta:.6f}: {error}")
    cycles.sort(key=lambda c: c.jump_angle)
    return cycles
