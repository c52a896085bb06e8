"""Exception hierarchy shared by all modules."""


class SturmGreenError(Exception):
    """Base class for every error raised by this package."""


class ArgumentOrderError(SturmGreenError, ValueError):
    """Raised when an interval is given with its endpoints reversed."""


class InvalidWindowError(SturmGreenError, ValueError):
    pass


class AdmissibilityError(SturmGreenError, ValueError):
    """The potential is malformed or dips below 1 somewhere."""


class OutOfDomainError(SturmGreenError, ValueError):
    pass


class SamplingError(SturmGreenError, ValueError):
    """A sampled function does not line up with the grid it is used on."""


class InvalidProbeError(SturmGreenError, ValueError):
    pass


class PreconditionError(SturmGreenError, ValueError):
    pass


class DiagonalDerivativeError(SturmGreenError, ValueError):
    """The x-derivative of the Green kernel jumps on the diagonal x == t."""


class InternalConsistencyError(SturmGreenError, RuntimeError):
    """A state that the admissibility hypothesis rules out was reached."""


class RefinementError(SturmGreenError, RuntimeError):
    """Tolerance could not be met within the step budget."""

    def __init__(self, message, worst_residual):
        super().__init__(f"{message} (worst residual {worst_residual:.3e})")
        self.worst_residual = worst_residual
