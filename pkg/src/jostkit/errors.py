"""Exception hierarchy.

Every error carries a short ``tag`` naming the violated condition so that the
command-line front end can emit machine-readable diagnostics.
"""


class JostError(Exception):
    """Base class for all library errors."""

    tag = "error"

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details


class DomainError(JostError, ValueError):
    tag = "domain"


class PoleError(JostError, ZeroDivisionError):
    tag = "pole"


class DegenerateZeroError(JostError):
    """A zero of even order (or a cluster) was found on the real axis."""

    tag = "degenerate-zero"


class InsufficientDataError(JostError, ValueError):
    tag = "insufficient-data"


class EnvelopeError(JostError, ValueError):
    tag = "envelope"


class InvalidSpectralDataError(JostError, ValueError):
    tag = "normalization"


class NoCanonicalWeightError(JostError):
    tag = "canonical-weight"


class InsufficientAnalyticityError(JostError):
    tag = "insufficient-analyticity"


class AnalyticityLossError(JostError):
    """Stripping produced a Jost function with negative Laurent modes."""

    tag = "analyticity-loss"


class NonphysicalDataError(JostError):
    tag = "nonphysical"


class ConsistencyError(JostError):
    tag = "internal-consistency"


class NotSchurError(JostError, ValueError):
    tag = "not-schur"


class InapplicableError(JostError):
    tag = "inapplicable"


class SchemaError(JostError, ValueError):
    """Input file failed validation; ``field`` names the offending entry."""

    tag = "schema"

    def __init__(self, message, field=None, line=None):
        super().__init__(message, field=field, line=line)
        self.field = field
        self.line = line
