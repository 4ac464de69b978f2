# models/ode_engine.py
"""Numerical kernel: adaptive Dormand-Prince 5(4) integration with dense
output and event location, scalar bisection and damped Newton with central
finite-difference Jacobians."""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from models.errors import (BracketError, EscapeError, IntegrationError, MaxStepsExceededError,
                           NewtonConvergenceError, SingularJacobianError, StiffnessError)

logger = logging.getLogger(__name__)

# Dormand-Prince tableau
C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
A = np.array([
    [0, 0, 0, 0, 0],
    [1 / 5, 0, 0, 0, 0],
    [3 / 40, 9 / 40, 0, 0, 0],
    [44 / 45, -56 / 15, 32 / 9, 0, 0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
])
B = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
E = np.array([-71 / 57600, 0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
# quartic dense-output interpolant, y(t0 + x h) = y0 + h * (K.T @ P) @ [x, x^2, x^3, x^4]
P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

ORDER = 5
SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
# PI controller exponents (Gustafsson)
BETA_1 = 0.7 / ORDER
BETA_2 = 0.4 / ORDER
UNDERFLOW = 1e-14
EVENT_REL_TOL = 1e-12


@dataclass(frozen=True)
class EventSpec:
    """Scalar event g(t, state) = 0.

    direction: +1 only rising crossings, -1 only falling, 0 any.
    """
    fn: Callable
    direction: int = 0
    terminal: bool = False
    name: str = "event"

    def __call__(self, t, y):
        return self.fn(t, y)


class EventHit(NamedTuple):
    name: str
    t: float
    state: np.ndarray
    direction: int
    terminal: bool


@dataclass
class Trajectory:
    """Accepted nodes of an integration plus the per-step interpolants."""
    t: np.ndarray
    y: np.ndarray
    steps: list = field(default_factory=list, repr=False)  # (t_old, h, y_old, Q)
    stats: dict = field(default_factory=dict)
    status: str = "completed"

    @property
    def t_final(self):
        return float(self.t[-1])

    @property
    def y_final(self):
        return self.y[-1].copy()

    @property
    def direction(self):
        return 1.0 if self.t[-1] >= self.t[0] else -1.0

    def __len__(self):
        return len(self.t)

    def __call__(self, t):
        """Dense output at time t (inside the integrated span)."""
        if not self.steps:
            return self.y[0].copy()
        keys = self.t[:-1] if self.direction > 0 else -self.t[:-1]
        tt = t if self.direction > 0 else -t
        i = int(np.searchsorted(keys, tt, side="right")) - 1
        i = min(max(i, 0), len(self.steps) - 1)
        return _dense_eval(self.steps[i], t)

    def sample(self, n):
        """States at n equispaced times across the span, endpoints included."""
        times = np.linspace(self.t[0], self.t[-1], n)
        return times, self.evaluate(times)

    def evaluate(self, times):
        """Vectorized dense output at an array of times."""
        times = np.asarray(times, dtype=float)
        if not self.steps:
            return np.repeat(self.y[:1], times.size, axis=0)
        t_old = np.array([s[0] for s in self.steps])
        h = np.array([s[1] for s in self.steps])
        y_old = np.array([s[2] for s in self.steps])
        Q = np.array([s[3] for s in self.steps])
        keys = t_old if self.direction > 0 else -t_old
        tt = times if self.direction > 0 else -times
        idx = np.clip(np.searchsorted(keys, tt, side="right") - 1, 0, len(self.steps) - 1)
        x = (times - t_old[idx]) / h[idx]
        powers = np.stack([x, x * x, x ** 3, x ** 4], axis=1)
        return y_old[idx] + h[idx, None] * np.einsum("mdk,mk->md", Q[idx], powers)

    def dense_times(self, max_edge, components=None):
        """Times subdividing every step so that chords between consecutive
        samples (in the chosen state components) stay below max_edge."""
        comp = slice(None) if components is None else components
        chords = np.linalg.norm(np.diff(self.y[:, comp], axis=0), axis=1)
        pieces = [self.t[:1]]
        for i, chord in enumerate(chords):
            k = max(1, int(math.ceil(chord / max_edge)))
            pieces.append(np.linspace(self.t[i], self.t[i + 1], k + 1)[1:])
        return np.concatenate(pieces)


def _dense_eval(step, t):
    t_old, h, y_old, Q = step
    x = (t - t_old) / h
    return y_old + h * (Q @ np.array([x, x * x, x ** 3, x ** 4]))


def _rk_step(fun, t, y, f, h):
    K = np.empty((7, y.size))
    K[0] = f
    for s in range(1, 6):
        dy = K[:s].T @ A[s, :s] * h
        K[s] = fun(t + C[s] * h, y + dy)
    y_new = y + h * (K[:6].T @ B)
    f_new = fun(t + h, y_new)
    K[6] = f_new
    return y_new, f_new, K


def _initial_step(fun, t0, y0, f0, direction, rtol, atol, span):
    scale = atol + np.abs(y0) * rtol
    d0 = np.linalg.norm(y0 / scale) / math.sqrt(y0.size)
    d1 = np.linalg.norm(f0 / scale) / math.sqrt(y0.size)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    y1 = y0 + h0 * direction * f0
    f1 = fun(t0 + h0 * direction, y1)
    d2 = np.linalg.norm((f1 - f0) / scale) / math.sqrt(y0.size) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / ORDER)
    return min(100 * h0, h1, span)


def _crossing(g_old, g_new, direction):
    rising = g_old < 0 <= g_new
    falling = g_old > 0 >= g_new
    if direction > 0:
        return rising
    if direction < 0:
        return falling
    return rising or falling


def _locate(event, step, t_a, g_a, t_b, tol):
    """Illinois false position on the interpolant; returns the post-crossing end."""
    a, fa = t_a, g_a
    b = t_b
    fb = event(b, _dense_eval(step, b))
    side = 0
    for _ in range(200):
        if abs(b - a) <= tol:
            break
        if fa == fb:
            c = 0.5 * (a + b)
        else:
            c = b - fb * (b - a) / (fb - fa)
            # keep c strictly inside and away from the ends
            lo, hi = min(a, b), max(a, b)
            margin = 0.01 * (hi - lo)
            if not lo + margin <= c <= hi - margin:
                c = 0.5 * (a + b)
        fc = event(c, _dense_eval(step, c))
        if fc == 0.0 or (fc > 0) == (fb > 0):
            b, fb = c, fc
            if side == -1:
                fa *= 0.5
            side = -1
        else:
            a, fa = c, fc
            if side == 1:
                fb *= 0.5
            side = 1
    return b


def integrate(field, s0, t_span, tols=(1e-9, 1e-11), events=(), max_steps=200000,
              first_step=None, max_step=math.inf):
    """Integrate state' = field(t, state) across t_span.

    Returns (Trajectory, list of EventHit). A terminal event truncates the
    trajectory at the located event time. Backward spans are allowed.
    """
    rtol, atol = tols
    if not (rtol > 0 and atol > 0):
        raise ValueError(f"tolerances must be positive, got {tols}")
    t0, t1 = float(t_span[0]), float(t_span[1])
    span = abs(t1 - t0)
    if not span > 0 or not math.isfinite(span):
        raise ValueError(f"degenerate time span {t_span}")
    direction = 1.0 if t1 > t0 else -1.0
    event_tol = EVENT_REL_TOL * span
    h_min = UNDERFLOW * span

    y = np.array(s0, dtype=float)
    f = np.asarray(field(t0, y), dtype=float)
    nfev = 1
    h = first_step if first_step else _initial_step(field, t0, y, f, direction, rtol, atol, span)
    nfev += 1
    h = min(h, max_step)

    ts, ys, steps = [t0], [y.copy()], []
    g_vals = [ev(t0, y) for ev in events]
    hits = []
    t = t0
    err_prev = 1e-4
    accepted = rejected = 0
    status = "completed"

    while direction * (t1 - t) > 0:
        if accepted + rejected >= max_steps:
            raise MaxStepsExceededError(
                f"exceeded {max_steps} steps at t={t:.6g} of span {t_span}")
        h = min(h, abs(t1 - t))
        if h < h_min:
            raise StiffnessError(f"step size underflow at t={t:.12g} (h={h:.3g})", t=t, state=y.copy())
        step_rejected = False
        while True:
            t_new = t + direction * h
            if direction * (t_new - t1) > 0 or abs(t1 - t_new) < h_min:
                t_new = t1
            h_signed = t_new - t
            y_new, f_new, K = _rk_step(field, t, y, f, h_signed)
            nfev += 6
            scale = atol + np.maximum(np.abs(y), np.abs(y_new)) * rtol
            err = float(np.linalg.norm(K.T @ E * h_signed / scale) / math.sqrt(y.size))
            if not math.isfinite(err):
                err = math.inf
            if err <= 1.0:
                if err == 0.0:
                    factor = MAX_FACTOR
                else:
                    factor = SAFETY * err ** -BETA_1 * err_prev ** BETA_2
                    factor = min(MAX_FACTOR, max(MIN_FACTOR, factor))
                if step_rejected:
                    factor = min(1.0, factor)
                err_prev = max(err, 1e-4)
                h_next = min(abs(h_signed) * factor, max_step)
                break
            rejected += 1
            step_rejected = True
            factor = MIN_FACTOR if not math.isfinite(err) else max(MIN_FACTOR, SAFETY * err ** (-1.0 / ORDER))
            h = abs(h_signed) * factor
            if h < h_min:
                raise StiffnessError(f"step size underflow at t={t:.12g} (h={h:.3g})",
                                     t=t, state=y.copy())

        accepted += 1
        step = (t, h_signed, y.copy(), K.T @ P)
        steps.append(step)

        terminal_hit = None
        if events:
            found = []
            for i, ev in enumerate(events):
                g_new = ev(t_new, y_new)
                if _crossing(g_vals[i], g_new, ev.direction):
                    t_root = _locate(ev, step, t, g_vals[i], t_new, event_tol)
                    # a root glued to the start point is the event we started on
                    if abs(t_root - t0) > 10 * event_tol:
                        sign = 1 if g_new > g_vals[i] else -1
                        found.append((direction * t_root, i, t_root, sign))
                g_vals[i] = g_new
            for _, i, t_root, sign in sorted(found):
                ev = events[i]
                state = _dense_eval(step, t_root)
                hits.append(EventHit(ev.name, t_root, state, sign, ev.terminal))
                if ev.terminal:
                    terminal_hit = (t_root, state)
                    break

        if terminal_hit is not None:
            t_root, state = terminal_hit
            ts.append(t_root)
            ys.append(state)
            status = "terminated"
            break

        t, y, f = t_new, y_new, f_new
        ts.append(t)
        ys.append(y.copy())
        h = h_next

    traj = Trajectory(t=np.array(ts), y=np.array(ys), steps=steps,
                      stats={"nfev": nfev, "accepted": accepted, "rejected": rejected},
                      status=status)
    logger.debug(f"integrate {t_span}: {accepted} accepted, {rejected} rejected, status={status}")
    return traj, hits


def bisect_root(f, bracket, tol=1e-12, max_iter=200):
    """Root of a scalar f inside bracket (lo, hi) with f(lo) f(hi) < 0."""
    lo, hi = float(bracket[0]), float(bracket[1])
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if not (f_lo * f_hi < 0):
        raise BracketError(f"f does not change sign on [{lo:.10g}, {hi:.10g}] "
                           f"(f={f_lo:.3g}, {f_hi:.3g})")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if abs(hi - lo) <= tol or mid == lo or mid == hi:
            return mid
        f_mid = f(mid)
        if f_mid == 0.0:
            return mid
        if (f_mid < 0) == (f_lo < 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def fd_jacobian(residual, x, r0=None):
    """Central finite-difference Jacobian, step max(1e-6, 1e-6 |x_j|)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    m = np.asarray(residual(x) if r0 is None else r0).size
    J = np.empty((m, n))
    for j in range(n):
        h = max(1e-6, 1e-6 * abs(x[j]))
        xp, xm = x.copy(), x.copy()
        xp[j] += h
        xm[j] -= h
        J[:, j] = (np.asarray(residual(xp)) - np.asarray(residual(xm))) / (2 * h)
    return J


class NewtonResult(NamedTuple):
    root: np.ndarray
    jacobian: np.ndarray
    iterations: int
    residual_norm: float


def newton_solve(residual, x0, tol=1e-10, max_iter=30, max_halvings=12,
                 jacobian: Optional[Callable] = None):
    """Damped Newton on residual(x) = 0 with step halving until the
    sup-norm of the residual decreases."""
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    jac = jacobian or (lambda z: fd_jacobian(residual, z))
    r = np.atleast_1d(np.asarray(residual(x), dtype=float))
    norm = float(np.max(np.abs(r)))
    for it in range(max_iter + 1):
        if norm <= tol:
            J = np.atleast_2d(jac(x))
            logger.debug(f"newton converged in {it} iterations, |r|={norm:.3e}")
            return NewtonResult(x, J, it, norm)
        if it == max_iter:
            break
        J = np.atleast_2d(jac(x))
        cond = np.linalg.cond(J)
        if not math.isfinite(cond) or cond > 1e12:
            raise SingularJacobianError(f"singular Jacobian (cond={cond:.3g}) at iterate {it}",
                                        last_iterate=x, residual_norm=norm)
        dx = np.linalg.solve(J, -r)
        lam = 1.0
        for _ in range(max_halvings + 1):
            x_try = x + lam * dx
            try:
                r_try = np.atleast_1d(np.asarray(residual(x_try), dtype=float))
                norm_try = float(np.max(np.abs(r_try)))
            except (IntegrationError, EscapeError):
                norm_try = math.inf
            if norm_try < norm:
                break
            lam *= 0.5
        else:
            raise NewtonConvergenceError(
                f"damping failed to decrease the residual (|r|={norm:.3e}) at iterate {it}",
                last_iterate=x, residual_norm=norm)
        x, r, norm = x_try, r_try, norm_try
        logger.debug(f"newton iterate {it + 1}: |r|={norm:.3e}, damping={lam:g}")
    raise NewtonConvergenceError(f"no convergence in {max_iter} iterations (|r|={norm:.3e})",
                                 last_iterate=x, residual_norm=norm)
