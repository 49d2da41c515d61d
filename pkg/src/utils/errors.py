"""Exception hierarchy shared by the library and the CLI."""


class AdjointDeisError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(AdjointDeisError, ValueError):
    """Argument outside the domain of a schedule function (t, lambda)."""


class ContractError(AdjointDeisError, ValueError):
    """Caller broke a precondition: shapes, time order, missing recordings."""


class NumericalError(AdjointDeisError):
    """Non-finite values or a degenerate computation."""


class ConfigError(AdjointDeisError):
    """Run configuration could not be read or validated."""
