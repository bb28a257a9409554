"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class DelayAdmitError(Exception):
    """Base class for every error raised by this package."""


class DomainError(DelayAdmitError, ValueError):
    """Parameters outside the admissible domain (e.g. Re(lambda) >= 0, tau <= 0)."""


class InfeasibleModeError(DomainError):
    """A mode lies outside the stability region for the given delay.

    ``index`` is the 1-based mode index when the error comes from a system.
    """

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class PoleError(DelayAdmitError, ZeroDivisionError):
    """Evaluation requested at (or numerically on top of) a characteristic root."""


class ConvergenceError(DelayAdmitError, RuntimeError):
    """An iterative procedure did not reach its tolerance.

    ``best`` carries the last estimate, when there is one.
    """

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class SpecError(DelayAdmitError, ValueError):
    """Malformed or invalid system specification document.

    ``location`` is either ``"line L, column C"`` for parse errors or a field
    path such as ``"modes[3].lambda"`` for invariant violations.
    """

    def __init__(self, message: str, location: str | None = None):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location
