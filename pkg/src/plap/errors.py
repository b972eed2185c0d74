"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class PreconditionError(ValueError):
    """A mathematical precondition of an operation does not hold."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to converge.

    ``partial`` carries the last available value (an integral estimate, the
    last Newton iterate, ...) and ``diagnostics`` a dict of extra details.
    """

    def __init__(self, message, partial=None, diagnostics=None):
        super().__init__(message)
        self.partial = partial
        self.diagnostics = dict(diagnostics or {})
