"""Exception and warning types raised across the package."""


class FermichainError(Exception):
    """Base class for all package errors."""


class EmptySupport(FermichainError, ValueError):
    pass


class NegativeDensity(FermichainError, ValueError):
    pass


class EmptyMass(FermichainError, ValueError):
    pass


class ExtrapolationError(FermichainError, ValueError):
    pass


class OversamplingError(FermichainError, ValueError):
    pass


class RecurrenceBreakdown(FermichainError, ArithmeticError):
    """A recurrence coefficient became nonpositive or lost all precision.

    ``index`` is the first failing beta index and ``partial`` holds the
    valid prefix of the chain coefficients.
    """

    def __init__(self, message, index, partial=None):
        super().__init__(message)
        self.index = index
        self.partial = partial


class NonzeroChemicalPotential(FermichainError, ValueError):
    pass


class Unsupported(FermichainError, NotImplementedError):
    pass


class NonAdjacentTerm(FermichainError, ValueError):
    pass


class SiteMismatch(FermichainError, ValueError):
    pass


class PolicyExhausted(FermichainError, RuntimeError):
    """Truncation hit the rank cap while discarding more than the policy allows."""

    def __init__(self, message, step=None, discarded=None):
        super().__init__(message)
        self.step = step
        self.discarded = discarded


class ConfigInvalid(FermichainError, ValueError):
    """An experiment configuration violates a validation rule.

    ``rule`` names the violated rule.
    """

    def __init__(self, message, rule=""):
        super().__init__(message)
        self.rule = rule


class NoConvergenceWarning(UserWarning):
    pass


class DegenerateFermiLevel(UserWarning):
    pass
