"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class InputError(ValueError):
    """Malformed or inconsistent input data."""


class CapabilityError(RuntimeError):
    """The request exceeds what the chosen code path can handle."""


class FitError(RuntimeError):
    """A fit failed to converge or the data cannot support it.

    ``report`` carries the last iterate and residual when available.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report or {}


class DegenerateChainError(RuntimeError):
    """A rate matrix has a kernel of dimension greater than one."""

    def __init__(self, message, basis=None):
        super().__init__(message)
        self.basis = basis
