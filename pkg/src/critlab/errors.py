"""Exception hierarchy.

Two families matter to callers: input problems (``ValidationError`` and
``DomainError``, both ``ValueError``) and numerical failures
(``NumericalError`` subclasses).  The CLI maps the first family to exit
code 2 and the second to exit code 3.
"""


class CritlabError(Exception):
    pass


class ValidationError(CritlabError, ValueError):
    """Bad configuration or inadmissible input object."""


class DomainError(CritlabError, ValueError):
    """Argument outside the domain where an operation is defined."""


class NumericalError(CritlabError):
    pass


class SingularityError(NumericalError):
    """Inverse-function formula hit a vanishing derivative."""


class GenericityError(NumericalError):
    """Datum violates a genericity condition (degenerate maximum, k = 0, ties)."""


class MultivaluedError(NumericalError):
    """Characteristic equation has several roots (t beyond breaking)."""

    def __init__(self, message, roots):
        super().__init__(message)
        self.roots = list(roots)


class NotExactError(NumericalError):
    """Differential polynomial is not a total x-derivative."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class BlowUpError(NumericalError):
    """Non-finite samples during time stepping."""

    def __init__(self, message, last_time, trajectory=None):
        super().__init__(message)
        self.last_time = last_time
        self.trajectory = trajectory


class ConvergenceError(NumericalError):
    """Newton iteration failed to converge."""

    def __init__(self, message, iterate=None, residual=None):
        super().__init__(message)
        self.iterate = iterate
        self.residual = residual


class PoleProximityError(ConvergenceError):
    """Newton failure attributed to a nearby pole of the transcendent."""


class DiagnosticError(NumericalError):
    """A post-hoc quality check (fit residual, coverage) failed."""
