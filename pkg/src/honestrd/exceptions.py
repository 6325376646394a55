"""Exception hierarchy.

The CLI maps the three top-level families (parse, domain, numeric) to
distinct exit codes, so every error raised by the library derives from one
of them.
"""


class HonestRDError(Exception):
    """Base class for all library errors."""


class ParseError(HonestRDError):
    """Malformed input file or command-line value."""


class DomainError(HonestRDError, ValueError):
    """An argument lies outside the domain of the operation."""


class NumericError(HonestRDError, ArithmeticError):
    """A numerical procedure failed to produce a trustworthy answer."""


class EmptySide(DomainError):
    pass


class NonpositiveVariance(DomainError):
    pass


class LengthMismatch(DomainError):
    pass


class NonpositiveBandwidth(DomainError):
    pass


class TooFewNeighbors(DomainError):
    pass


class TooFewObservations(DomainError):
    pass


class EmptyInterval(DomainError):
    pass


class SingularMomentMatrix(NumericError):
    pass


class NoConvergence(NumericError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class InfiniteBias(NumericError):
    pass


class DegenerateDenominator(NumericError):
    pass


class OptimizationFailed(NumericError):
    pass
