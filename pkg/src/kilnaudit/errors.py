"""Exception hierarchy shared across the package."""


class KilnAuditError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(KilnAuditError, ValueError):
    """Coordinate or parameter outside its mathematical domain."""


class GeometryError(KilnAuditError, ValueError):
    """Degenerate or malformed geometry."""


class FrameError(KilnAuditError, ValueError):
    """Coordinate-frame mismatch (pixel vs Mercator)."""


class ParseError(KilnAuditError, ValueError):
    """Malformed external data; the message locates the problem."""


class ConfigError(KilnAuditError, ValueError):
    """Invalid rule table, rates table or service configuration."""


class WorkflowError(KilnAuditError):
    """Invalid validation action (unknown kiln, action on a discarded kiln)."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


class OracleError(KilnAuditError, RuntimeError):
    """Historical-imagery oracle returned answers violating monotone presence."""
