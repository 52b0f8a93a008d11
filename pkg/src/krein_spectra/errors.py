"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command line runner:
1 for invalid input or configuration, 2 for numerical failures.
"""

from __future__ import annotations


class KreinSpectraError(Exception):
    exit_code = 1


class InvalidShape(KreinSpectraError, ValueError):
    pass


class IncompatibleSpacing(KreinSpectraError, ValueError):
    pass


class EmptyInterior(KreinSpectraError, ValueError):
    pass


class InvalidDimension(KreinSpectraError, ValueError):
    pass


class NegativePotential(KreinSpectraError, ValueError):
    pass


class LengthMismatch(KreinSpectraError, ValueError):
    pass


class UnsupportedShape(KreinSpectraError, ValueError):
    pass


class TooLarge(KreinSpectraError, ValueError):
    pass


class WindowTooSparse(KreinSpectraError, ValueError):
    pass


class WindowBeyondReliability(KreinSpectraError, ValueError):
    pass


class ConfigError(KreinSpectraError, ValueError):
    pass


class NumericalError(KreinSpectraError, ArithmeticError):
    exit_code = 2


class NotPositiveDefinite(NumericalError):
    pass


class NoConvergence(NumericalError):
    """Iterative solver hit its step cap.

    ``partial`` holds the pairs that did converge (a ``Spectrum``).
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class SingularShift(NumericalError):
    pass


class NotAnEigenpair(NumericalError):
    pass


class ZeroVector(NumericalError):
    pass
