"""
Exception hierarchy for nuv-binning

Every error is a ValueError so callers that only know about ValueError keep
working. The ``exit_code`` attribute is what the command line reports.
"""


class NuvError(ValueError):
    """Base class for all library errors"""
    exit_code = 1


class DomainError(NuvError):
    """Input outside the domain of an operation (shape, length, emptiness)"""
    exit_code = 2


class DegenerateVarianceError(DomainError):
    """The window has zero variance, so the measure is undefined"""
    exit_code = 4


class InfeasibleParameterError(DomainError):
    """Parameters that cannot be satisfied, e.g. b >= d in a predictor"""
    exit_code = 3


class InfeasibleBinningError(InfeasibleParameterError):
    """Requested bin count is impossible for the template"""
    exit_code = 3


class InvariantViolationError(NuvError):
    """A partition or assignment breaks its structural invariants"""
    exit_code = 3


class DegenerateModelError(NuvError):
    """Distortion model or prediction cannot be evaluated"""
    exit_code = 4


class GreedyConvergenceError(NuvError):
    """Greedy binning exceeded its iteration cap"""
    exit_code = 1


class ConfigurationError(NuvError):
    """Invalid experiment configuration or command line combination"""
    exit_code = 2


class VectorFileError(NuvError):
    """Unreadable or malformed vector / matrix file"""
    exit_code = 2
