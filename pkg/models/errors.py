# models/errors.py
"""Exception hierarchy shared by the numerical core and the command line."""


class StictionLabError(Exception):
    """Base class for every error raised by the lab."""


class ModelParamsError(StictionLabError, ValueError):
    """Parameters violate the model's invariants (mu_s > mu_d > 0, delta > 0, ...)."""


class ConfigError(StictionLabError, ValueError):
    """Malformed or inconsistent run configuration."""


class ExportError(StictionLabError, OSError):
    """Writing an output artifact failed."""


# Numerical kernel

class NumericalError(StictionLabError, RuntimeError):
    pass


class IntegrationError(NumericalError):
    pass


class StiffnessError(IntegrationError):
    """Step size fell below the underflow floor; carries the last accepted state."""

    def __init__(self, message, t=None, state=None):
        super().__init__(message)
        self.t = t
        self.state = state


class MaxStepsExceededError(IntegrationError):
    pass


class BracketError(NumericalError, ValueError):
    pass


class NewtonConvergenceError(NumericalError):
    def __init__(self, message, last_iterate=None, residual_norm=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual_norm = residual_norm


class SingularJacobianError(NewtonConvergenceError):
    pass


class EscapeError(NumericalError):
    """Orbit left the admissible neighbourhood (|y2| > Y_max)."""


class BranchLostError(NumericalError):
    pass


# Singular geometry

class GeometryError(StictionLabError):
    pass


class FoldedSingularityFoldError(GeometryError):
    """xi <= delta: the folded singularities have merged and disappeared."""


class DegenerateEigenvectorError(GeometryError):
    pass


class CanardMissesSectionError(GeometryError):
    """The canard gamma_+ leaves C_a without crossing the section Upsilon."""


class InadmissiblePointError(GeometryError, ValueError):
    pass


class ThetaRangeError(GeometryError):
    pass


# Singular return map

class ReturnMapError(GeometryError):
    def __init__(self, message, theta=None, y2=None):
        super().__init__(message)
        self.theta = theta
        self.y2 = y2


class HitFoldedSaddleError(ReturnMapError):
    """The orbit runs into a folded saddle: a discontinuity point of R0."""


class EntersFunnelError(ReturnMapError):
    """The orbit is captured by a folded node/focus funnel."""


def exit_code_for(error):
    """Map an error to the command-line exit code (2 usage/config, 3 numerical)."""
    if isinstance(error, (ConfigError, ModelParamsError)):
        return 2
    return 3
