"""Exception hierarchy shared by all modules."""


class RihomError(Exception):
    """Base class for library errors."""


class DomainError(RihomError, ValueError):
    """Argument outside the domain of an operation (e.g. x = 0 for h)."""


class InvalidMapError(RihomError, ValueError):
    """A map description is not an increasing homeomorphism with finite tails."""


class ConstructionError(RihomError, RuntimeError):
    """A perturbation construction failed its own verification."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class InfeasibleError(RihomError, RuntimeError):
    """No admissible parameter choice exists for the given input."""


class NotExactError(RihomError, ArithmeticError):
    """An exact value was requested where only an enclosure is available."""
