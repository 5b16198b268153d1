"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input outside the documented domain of an operation."""


class AccuracyError(RuntimeError):
    """A refinement check failed; carries both candidate values."""

    def __init__(self, message, coarse=None, fine=None):
        super().__init__(message)
        self.coarse = coarse
        self.fine = fine


class ResourceError(RuntimeError):
    """Problem size beyond the supported budget."""


class SamplerError(RuntimeError):
    """Rejection sampler stalled or proposed an invalid envelope."""


class ContourError(ValueError):
    """Contour geometry is inconsistent (curves intersect or are misordered)."""


class CutoffViolation(ValueError):
    """A diagonal draw lies outside the admissible cutoff region."""


class TrendFailure(RuntimeError):
    """A convergence ladder did not decrease; carries the offending table."""

    def __init__(self, message, table=None):
        super().__init__(message)
        self.table = table
