# models/friction_model.py
"""Regularized stiction oscillator: parameters, the regularization family,
the vector fields of every chart and the critical-manifold algebra.

State conventions
-----------------
PhaseState   (x, y, theta)   original variables of the forced oscillator
ScaledState  (x, y2, theta)  scaling chart, y2 = y / eps
ReducedPoint (y2, theta)     point on the critical manifold C, x implied

theta is kept unwrapped while integrating; it is reduced mod 2*pi only by
`apply_symmetry` and by section bookkeeping.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property, singledispatch
from typing import Callable, Optional

import numpy as np

from models.errors import ModelParamsError

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class RegularizationFn:
    """Evaluatable regularization phi with analytic first and second derivatives.

    The callables accept floats or numpy arrays.
    """
    eval: Callable
    deriv: Callable
    deriv2: Callable
    meta: dict = field(default_factory=dict, compare=False)

    def __call__(self, s):
        return self.eval(s)

    @property
    def family(self):
        return self.meta.get("family", "custom")

    @classmethod
    def from_callables(cls, eval, deriv, deriv2, **meta):
        meta.setdefault("family", "custom")
        return cls(eval=eval, deriv=deriv, deriv2=deriv2, meta=meta)


def standard_coefficients(delta, mu):
    """Closed-form (alpha, beta) of the standard family for given delta and mu."""
    d2 = delta * delta
    root = math.sqrt(d2 + 1.0)
    alpha = d2 * (2.0 * d2 + 1.0) - 2.0 * delta ** 3 * root / mu
    beta = (2.0 * delta * mu * (d2 + 1.0) ** 1.5
            - 4.0 * d2 * (d2 + 1.0)
            + 2.0 * delta ** 3 * root / mu)
    return alpha, beta


def make_standard_phi(delta, mu):
    """Standard regularization phi(s) = s/sqrt(s^2+1) * (1 + beta/(alpha + s^2)).

    With the closed-form alpha, beta this satisfies phi(+-delta) = +-mu and
    phi'(+-delta) = 0, and phi(-1/s) = -1 - s^2 (beta - 1/2) + O(s^4), i.e.
    the tail exponent is k = 2. Written as 1 + a/(1 + b s^2) the same
    function has a = beta/alpha and b = 1/alpha.
    """
    if not delta > 0:
        raise ModelParamsError(f"delta must be positive, got {delta}")
    if not mu > 1:
        raise ModelParamsError(f"mu = mu_s/mu_d must exceed 1, got {mu}")

    alpha, beta = standard_coefficients(delta, mu)
    family = _StandardFamily(alpha, beta)
    return RegularizationFn(
        eval=family.value, deriv=family.slope, deriv2=family.curvature,
        meta={"family": "standard", "alpha": alpha, "beta": beta, "k": 2,
              "delta": delta, "mu": mu, "tail_coefficient": beta - 0.5},
    )


class _StandardFamily:
    # g(s) = s/sqrt(s^2+1), h(s) = 1 + beta/(alpha+s^2), phi = g*h.
    # Bound methods pickle, so params survive a trip to a worker process.

    def __init__(self, alpha, beta):
        self.alpha = alpha
        self.beta = beta

    def value(self, s):
        s2 = s * s
        return s / (s2 + 1.0) ** 0.5 * (1.0 + self.beta / (self.alpha + s2))

    def slope(self, s):
        beta = self.beta
        s2 = s * s
        q = s2 + 1.0
        w = self.alpha + s2
        g = s / q ** 0.5
        dg = q ** -1.5
        h = 1.0 + beta / w
        dh = -2.0 * beta * s / (w * w)
        return dg * h + g * dh

    def curvature(self, s):
        beta = self.beta
        s2 = s * s
        q = s2 + 1.0
        w = self.alpha + s2
        g = s / q ** 0.5
        dg = q ** -1.5
        ddg = -3.0 * s * q ** -2.5
        h = 1.0 + beta / w
        dh = -2.0 * beta * s / (w * w)
        ddh = -2.0 * beta / (w * w) + 8.0 * beta * s2 / (w * w * w)
        return ddg * h + 2.0 * dg * dh + g * ddh


def _tanh_slope(s):
    c = np.cosh(s)
    return 1.0 / (c * c)


def _tanh_curvature(s):
    return -2.0 * np.tanh(s) * _tanh_slope(s)


def make_tanh_phi():
    """phi = tanh: monotone, so it has no fold at +-delta (violates A3)."""
    return RegularizationFn(eval=np.tanh, deriv=_tanh_slope, deriv2=_tanh_curvature,
                            meta={"family": "tanh"})


PHI_FAMILIES = {"standard", "tanh"}


def make_phi(family, delta, mu):
    if family == "standard":
        return make_standard_phi(delta, mu)
    if family == "tanh":
        return make_tanh_phi()
    raise ModelParamsError(f"unknown regularization family {family!r}")


@dataclass(frozen=True)
class ModelParams:
    """Physical and regularization parameters of the oscillator.

    delta  fold half-width of phi'
    mu_s   static friction level
    mu_d   dynamic friction level
    xi     slow-forcing rate, omega = eps * xi (math.inf is the Hamiltonian limit)
    eps    regularization / forcing scale
    """
    delta: float
    mu_s: float
    mu_d: float
    xi: float
    eps: float = 0.0
    phi: Optional[RegularizationFn] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        for name in ("delta", "mu_s", "mu_d", "xi", "eps"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)) or math.isnan(value):
                raise ModelParamsError(f"{name} must be a real number, got {value!r}")
        if not self.delta > 0:
            raise ModelParamsError(f"delta must be positive, got {self.delta}")
        if not self.mu_d > 0:
            raise ModelParamsError(f"mu_d must be positive, got {self.mu_d}")
        if not self.mu_s > self.mu_d:
            raise ModelParamsError(
                f"static friction must exceed dynamic friction (mu_s={self.mu_s}, mu_d={self.mu_d})")
        if not self.xi > 0:
            raise ModelParamsError(f"xi must be positive, got {self.xi}")
        if not (self.eps >= 0 and math.isfinite(self.eps)):
            raise ModelParamsError(f"eps must be finite and non-negative, got {self.eps}")

    @property
    def mu(self):
        return self.mu_s / self.mu_d

    @property
    def omega(self):
        return self.eps * self.xi

    @property
    def inv_xi(self):
        return 1.0 / self.xi

    @property
    def has_folded_singularities(self):
        return self.xi > self.delta

    @cached_property
    def regularization(self):
        if self.phi is not None:
            return self.phi
        return make_standard_phi(self.delta, self.mu)

    def with_(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        return {"delta": self.delta, "mu_s": self.mu_s, "mu_d": self.mu_d,
                "xi": self.xi, "eps": self.eps, "mu": self.mu,
                "phi_family": self.regularization.family}


@dataclass(frozen=True)
class PhaseState:
    x: float
    y: float
    theta: float

    def as_array(self):
        return np.array([self.x, self.y, self.theta])


@dataclass(frozen=True)
class ScaledState:
    x: float
    y2: float
    theta: float

    def as_array(self):
        return np.array([self.x, self.y2, self.theta])

    @classmethod
    def from_phase(cls, s, eps):
        if not eps > 0:
            raise ModelParamsError("the scaling chart needs eps > 0")
        return cls(s.x, s.y / eps, s.theta)

    def to_phase(self, eps):
        return PhaseState(self.x, self.y2 * eps, self.theta)


@dataclass(frozen=True)
class ReducedPoint:
    y2: float
    theta: float

    def as_array(self):
        return np.array([self.y2, self.theta])


class Sheet(str, Enum):
    ATTRACTING = "attracting"
    FOLD = "fold"
    REPELLING_MINUS = "repelling-"
    REPELLING_PLUS = "repelling+"


def sheet_of(params, p, tol=1e-12):
    """Sheet of C carrying p; agrees with the sign of the layer eigenvalue."""
    y2 = p.y2 if isinstance(p, ReducedPoint) else p
    if abs(abs(y2) - params.delta) <= tol:
        return Sheet.FOLD
    if abs(y2) < params.delta:
        return Sheet.ATTRACTING
    return Sheet.REPELLING_MINUS if y2 < 0 else Sheet.REPELLING_PLUS


def _require_eps(params):
    if not params.eps > 0:
        raise ModelParamsError("eps = 0 has no full/scaled field; use the layer or reduced fields")


def full_field(params, s):
    """(x', y', theta') of the forced oscillator in original time."""
    _require_eps(params)
    phi = params.regularization
    return np.array([
        s.y,
        -s.x - math.sin(s.theta) - params.mu_d * phi(s.y / params.eps),
        params.eps * params.xi,
    ])


def scaled_slow_field(params, s):
    """(x', y2', theta') of the scaling chart in slow time tau = eps * t."""
    _require_eps(params)
    phi = params.regularization
    return np.array([
        s.y2,
        (-s.x - math.sin(s.theta) - params.mu_d * phi(s.y2)) / params.eps ** 2,
        params.xi,
    ])


def layer_field(params, s):
    """eps = 0 fast subsystem: only y2 moves."""
    phi = params.regularization
    return np.array([0.0, -s.x - math.sin(s.theta) - params.mu_d * phi(s.y2), 0.0])


def reduced_desing_field(params, p):
    """Desingularized reduced flow on C in (y2, theta) coordinates."""
    phi = params.regularization
    return (-params.inv_xi * p.y2 - math.cos(p.theta), params.mu_d * phi.deriv(p.y2))


def reduced_field(params, p):
    """Reduced flow before desingularization; singular on the fold lines."""
    phi = params.regularization
    slope = params.mu_d * phi.deriv(p.y2)
    if slope == 0.0:
        raise ModelParamsError(f"reduced flow is singular on the fold line (y2={p.y2})")
    return ((-p.y2 - params.xi * math.cos(p.theta)) / slope, params.xi)


def layer_eigenvalue(params, y2):
    """The single nontrivial eigenvalue of the layer problem on C."""
    return -params.mu_d * params.regularization.deriv(y2)


def manifold_x(params, p):
    """x coordinate of the point of C above (y2, theta)."""
    return -math.sin(p.theta) - params.mu_d * params.regularization(p.y2)


def half_circle_return(params, x0, theta0):
    """Landing x of the slip arc that leaves y = 0 at x0 within theta = theta0."""
    return 2.0 * params.mu_d - 2.0 * math.sin(theta0) - x0


@singledispatch
def apply_symmetry(s):
    """The symmetry (x, y, theta) -> (-x, -y, theta + pi)."""
    raise TypeError(f"no symmetry action on {type(s).__name__}")


@apply_symmetry.register
def _(s: PhaseState):
    return PhaseState(-s.x, -s.y, (s.theta + math.pi) % TWO_PI)


@apply_symmetry.register
def _(s: ScaledState):
    return ScaledState(-s.x, -s.y2, (s.theta + math.pi) % TWO_PI)


@apply_symmetry.register
def _(p: ReducedPoint):
    return ReducedPoint(-p.y2, (p.theta + math.pi) % TWO_PI)


# Array right-hand sides for the integrator. They avoid dataclass allocation
# in the inner loop.

def full_rhs(params):
    _require_eps(params)
    phi = params.regularization.eval
    mu_d, eps, omega = params.mu_d, params.eps, params.omega
    sin = math.sin

    def rhs(t, u):
        return np.array([u[1], -u[0] - sin(u[2]) - mu_d * phi(u[1] / eps), omega])
    return rhs


def reduced_desing_rhs(params, reverse=False):
    phi_d = params.regularization.deriv
    mu_d, inv_xi = params.mu_d, params.inv_xi
    cos = math.cos
    sign = -1.0 if reverse else 1.0

    def rhs(s, u):
        return np.array([sign * (-inv_xi * u[0] - cos(u[1])), sign * mu_d * phi_d(u[0])])
    return rhs


# Assumption checks

@dataclass
class AssumptionCheck:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)

    def to_dict(self):
        return {"name": self.name, "passed": bool(self.passed), "detail": self.detail}


@dataclass
class AssumptionReport:
    checks: list

    @property
    def passed(self):
        return all(check.passed for check in self.checks)

    def __getitem__(self, name):
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)

    @property
    def tail_exponent(self):
        return self["A4"].detail.get("fitted_exponent")

    def to_dict(self):
        return {"passed": self.passed, "checks": [c.to_dict() for c in self.checks]}


def _check_limits(phi, tol):
    scales = (1e4, 1e6, 1e8)
    errors = [max(abs(float(phi(S)) - 1.0), abs(float(phi(-S)) + 1.0)) for S in scales]
    monotone = all(b <= a + tol for a, b in zip(errors, errors[1:]))
    ok = monotone and errors[-1] <= max(tol, 1e-6)
    return AssumptionCheck("A1", ok, {"scales": list(scales), "errors": errors})


def _check_odd(phi, delta, tol):
    s = np.linspace(0.0, 10.0 * max(delta, 1.0), 1001)
    err = float(np.max(np.abs(phi(s) + phi(-s))))
    return AssumptionCheck("A2", err <= tol, {"max_odd_defect": err})


def _check_fold(phi, delta, mu, tol):
    peak_err = abs(float(phi(delta)) - mu)
    fold_err = max(abs(float(phi.deriv(delta))), abs(float(phi.deriv(-delta))))
    inner = np.linspace(-delta, delta, 403)[1:-1]
    outer = delta + np.geomspace(1e-3 * delta, 50.0, 400)
    inside_ok = bool(np.all(phi.deriv(inner) > 0))
    outside_ok = bool(np.all(phi.deriv(outer) < 0) and np.all(phi.deriv(-outer) < 0))
    curvature = float(phi.deriv2(delta))
    ok = (peak_err <= tol * max(1.0, mu) and fold_err <= tol
          and inside_ok and outside_ok and curvature < 0)
    return AssumptionCheck("A3", ok, {
        "phi_at_delta_error": peak_err,
        "dphi_at_fold": fold_err,
        "dphi_positive_inside": inside_ok,
        "dphi_negative_outside": outside_ok,
        "d2phi_at_delta": curvature,
    })


def _check_tail(phi, expected_k=None):
    # log-log slope of |phi(-1/s) + 1| on s in [1e-3, 1e-1]
    s = np.geomspace(1e-3, 1e-1, 25)
    r = phi(-1.0 / s) + 1.0
    if np.any(r >= 0):
        return AssumptionCheck("A4", False, {"reason": "phi(-1/s) + 1 is not strictly negative "
                                                       "(flat or wrong-sided tail)"})
    slope = float(np.polyfit(np.log(s), np.log(-r), 1)[0])
    k = int(round(slope))
    ok = k >= 1 and abs(slope - k) <= 0.1
    if expected_k is not None:
        ok = ok and abs(slope - expected_k) <= 0.1
    return AssumptionCheck("A4", ok, {"fitted_exponent": slope, "k": k,
                                      "expected_k": expected_k})


def verify_assumptions(phi, params, tol=1e-8):
    """Numerically check the structural assumptions A1-A4 on phi."""
    if not tol > 0:
        raise ModelParamsError(f"tol must be positive, got {tol}")
    report = AssumptionReport(checks=[
        _check_limits(phi, tol),
        _check_odd(phi, params.delta, tol),
        _check_fold(phi, params.delta, params.mu, tol),
        _check_tail(phi, phi.meta.get("k")),
    ])
    logger.debug(f"assumption report for {phi.family}: passed={report.passed}")
    return report
