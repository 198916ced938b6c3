"""Exception hierarchy shared by all cusplab modules."""


class CuspLabError(Exception):
    """Base class for every error raised by cusplab."""


class InputError(CuspLabError, ValueError):
    """Arguments violate an operation's preconditions."""


class SingularPointError(CuspLabError):
    """A smooth-locus operation was asked to work at a cusp point (some r_k = 0)."""


class SingularApproachError(CuspLabError):
    """Geodesic integration stalled while approaching the singular axis.

    The partial curve computed so far is kept on ``partial``.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class SolverError(CuspLabError):
    """An iterative solver failed to converge.

    ``best`` holds the best candidate found and ``residual`` its residual.
    """

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


class UnstableAngleError(CuspLabError):
    """Alexandrov angle extrapolation did not stabilize on the parameter grid."""

    def __init__(self, message, angles=None, params=None):
        super().__init__(message)
        self.angles = angles
        self.params = params
