"""Exception types shared by every module."""


class UeplabError(Exception):
    """Base class for errors raised by ueplab."""


class DomainError(UeplabError, ValueError):
    """Input outside the region where the quantity is defined.

    ``threshold`` carries the boundary value when one is known, e.g. the
    smallest admissible order for a Renyi entropy.
    """

    def __init__(self, message, threshold=None):
        super().__init__(message)
        self.threshold = threshold


class NonConvergenceError(UeplabError, ArithmeticError):
    """An iterative method stopped before meeting its tolerance."""
