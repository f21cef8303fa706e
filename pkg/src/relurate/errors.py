"""Exception taxonomy shared across the package."""


class RelurateError(Exception):
    """Base class for all package errors."""


class InputError(RelurateError, ValueError):
    """Caller supplied arguments violating a precondition."""


class CompositionError(RelurateError, ValueError):
    """Network composition with incompatible dimensions or depths."""


class CapacityError(RelurateError):
    """A builder cannot reach the requested accuracy within its size ceiling."""


class ConfigurationError(RelurateError):
    """A configuration is self-consistent but unusable (e.g. rejection rate too low)."""


class ContractError(RelurateError):
    """A runtime contract was violated (e.g. sup-norm assumption of an estimator)."""


class EstimationError(RelurateError):
    """A statistical estimate could not be formed (e.g. empty tail cells)."""


class DivergenceError(RelurateError):
    """Training produced non-finite losses; carries the offending configuration."""

    def __init__(self, message, config=None):
        super().__init__(message)
        self.config = config
