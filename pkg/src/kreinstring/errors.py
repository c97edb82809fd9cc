"""Exception hierarchy shared by all modules."""


class KreinError(Exception):
    """Base class for every error raised by the toolkit."""


class DomainError(KreinError, ValueError):
    """An argument lies outside the domain of the operation."""


class InputError(KreinError, ValueError):
    """Malformed or inconsistent input data (files, spectra, mass models).

    ``location`` names the offending key or index when known.
    """

    def __init__(self, message, location=None):
        if location is not None:
            message = f"{location}: {message}"
        super().__init__(message)
        self.location = location


class NumericalFailure(KreinError, ArithmeticError):
    """A numerical procedure could not reach the requested accuracy."""

    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} (at x={position!r})"
        super().__init__(message)
        self.position = position


class SearchBoundError(NumericalFailure):
    """Eigenvalue bracketing exhausted its search bound."""

    def __init__(self, message, found):
        super().__init__(f"{message}; found {found} eigenvalue(s)")
        self.found = found


class PoleProximityError(NumericalFailure):
    """Evaluation point too close to a pole of the compliance."""


class UnboundedTailError(KreinError, ValueError):
    """An infinite product or sum was requested without a tail model."""


class TruncationWarning(UserWarning):
    """A result depends on spectral data beyond the stored prefix."""
