"""Exception types shared across the package."""


class LeadCacheError(Exception):
    """Base class for errors raised by this package."""


class InvalidDegreeError(LeadCacheError, ValueError):
    """Requested cache degree exceeds the number of users."""


class TraceParseError(LeadCacheError, ValueError):
    """Malformed trace row; carries the offending 1-based line number."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class CatalogOverflowError(LeadCacheError, ValueError):
    """A trace contains more distinct files than the declared catalog size."""


class BudgetExceededError(LeadCacheError, RuntimeError):
    """Exact enumeration would exceed the configured budget."""


class FeasibilityError(LeadCacheError, ValueError):
    """Sampling marginals violate the feasibility conditions."""


class SolverError(LeadCacheError, RuntimeError):
    """The LP solver failed, was infeasible, or hit an iteration limit."""


class ConfigurationError(LeadCacheError, ValueError):
    """Inconsistent or unsupported configuration values."""


class PreconditionError(LeadCacheError, ValueError):
    """Operation input violates a documented precondition."""
