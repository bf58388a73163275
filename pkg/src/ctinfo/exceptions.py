"""Error types raised across the package.

Every error derives from :class:`CtinfoError` so callers can catch the whole
family at once. The CLI maps :class:`ParameterError` subclasses to exit code 3
and :class:`NumericalError` subclasses to exit code 4.
"""


class CtinfoError(Exception):
    """Base class for all package errors."""


class ParameterError(CtinfoError, ValueError):
    """Invalid model parameters or configuration."""


class DomainError(ParameterError):
    """A query point lies outside the domain of a path or trace."""


class ValidationError(CtinfoError, ValueError):
    """A data object violates its structural invariants."""


class InsufficientDataError(CtinfoError, ValueError):
    """Not enough data (events, samples, batches) for the requested estimate."""


class NumericalError(CtinfoError, ArithmeticError):
    """Base class for failures of a numerical procedure."""


class SimulationError(NumericalError):
    """A simulator contract was broken, e.g. an intensity exceeded its thinning bound."""


class NumericalInstabilityError(NumericalError):
    """A discretised update produced invalid values such as negative mass."""


class DivergenceError(NumericalError):
    """A quantity diverges, either analytically or along a simulated path."""


class SingularParameterError(NumericalError):
    """A closed form has a vanishing denominator at the requested parameters."""


class ConditioningError(NumericalError):
    """A least-squares design matrix is too ill-conditioned to trust."""


class ImpossibleEventError(NumericalError):
    """An observed event has zero probability under the model that should explain it."""


class NonEquivalentMeasuresError(DivergenceError):
    """The reference intensity vanishes at an observed event, so the log ratio is infinite."""


class BinningError(ValidationError):
    """A time bin holds more than one event."""
