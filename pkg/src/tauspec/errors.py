"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: domain and argument problems give 2,
convergence problems give 3 and failed verifications give 4.
"""


class TauspecError(Exception):
    """Base class."""


class DomainError(TauspecError, ValueError):
    """Input outside the domain of a function (pole, lattice point, bad chart)."""


class PoleError(DomainError):
    """A denominator of an instanton sum or closed formula vanishes."""


class ChartError(DomainError):
    """The requested monodromy chart is singular at the given point."""


class ConvergenceError(TauspecError, RuntimeError):
    """An iterative or truncated computation did not reach its tolerance."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class SearchWindowError(ConvergenceError):
    """Fewer roots than requested were found inside a scan window."""


class VerificationError(TauspecError):
    """A residual check exceeded its tolerance."""
