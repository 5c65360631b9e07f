"""Exception hierarchy shared by all modules."""


class SphcondError(Exception):
    """Base class for every error raised by this package."""


class DomainError(SphcondError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class DegenerateGeometryError(SphcondError, ValueError):
    """Point set for which the requested geometry is undefined."""


class InfeasibleError(SphcondError):
    """No selection satisfies the constraints."""


class RankDeficientError(SphcondError):
    """Matrix lacks full row rank; carries the condition number found."""

    def __init__(self, message, kappa=float("inf")):
        super().__init__(message)
        self.kappa = kappa


class SolverBudgetExceeded(SphcondError):
    """A search ran out of its node budget before proving optimality."""
