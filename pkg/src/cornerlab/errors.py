"""Exception hierarchy shared by every module."""


class CornerLabError(Exception):
    """Base class for all library errors."""


class PreconditionViolated(CornerLabError, ValueError):
    pass


class BudgetExceeded(CornerLabError):
    """A search ran out of its node/operation budget.

    ``best`` carries the best result known when the budget ran out (flagged
    inexact by the raiser), or ``None``.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class SearchBudgetExceeded(BudgetExceeded):
    pass


class StepBudgetExceeded(BudgetExceeded):
    pass


class NotFound(CornerLabError):
    pass


class ModulusTooSmall(CornerLabError, ValueError):
    pass


class NotNonUniform(PreconditionViolated):
    """The input is already uniform, so no increment is promised."""


class NoLargeCoefficient(PreconditionViolated):
    pass


class NoIncrementFound(CornerLabError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class InfeasibleProfile(CornerLabError):
    pass
