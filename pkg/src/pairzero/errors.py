"""Exception hierarchy."""


class PairZeroError(Exception):
    """Base class for every error raised by the package."""


class InvalidArgumentError(PairZeroError, ValueError):
    pass


class InvalidChannelError(InvalidArgumentError):
    pass


class NumericalDomainError(PairZeroError, ArithmeticError):
    """A computation left the finite floating-point domain.

    ``where`` names the failing side or quantity (e.g. ``"w+mu*z"``).
    """

    def __init__(self, message, where=None):
        super().__init__(message)
        self.where = where


class SolverError(PairZeroError, RuntimeError):
    """A power-control solver could not produce a feasible schedule."""

    def __init__(self, message, solver, diagnostics=None):
        super().__init__(message)
        self.solver = solver
        self.diagnostics = dict(diagnostics or {})


class ConfigError(InvalidArgumentError):
    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
