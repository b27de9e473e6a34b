"""Exception hierarchy shared by every solver in the package."""


class RosctlError(Exception):
    """Base class for all package errors."""


class DomainError(RosctlError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigurationError(RosctlError, ValueError):
    """Inconsistent inputs, e.g. mismatched time grids."""


class GenerationError(RosctlError):
    """Circulant embedding produced a negative eigenvalue."""


class ResourceLimitError(RosctlError):
    """A request exceeds the size an oracle routine is meant to handle."""


class ConvergenceError(RosctlError):
    """A fixed-point iteration did not reach its tolerance.

    The last residual is stored on ``residual``.
    """

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


class InadmissibleError(RosctlError):
    """A computed equilibrium violates the admissibility (stability) condition."""


class ExistenceError(RosctlError):
    """The existence condition of a game fails (no real saddle-point gains)."""


class BlowUpError(RosctlError):
    """A backward ODE left the positive bounded region, so no equilibrium certificate."""


class CoefficientSignError(RosctlError):
    """A negative base would be raised to a non-integer power."""


class StencilError(RosctlError):
    """A finite-difference stencil does not fit inside the admissible interval.

    ``min_offset`` is the smallest admissible distance from the boundary.
    """

    def __init__(self, message, min_offset):
        super().__init__(message)
        self.min_offset = min_offset
