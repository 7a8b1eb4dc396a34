"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of a mathematical function."""


class ConfigError(ValueError):
    """An experiment, decoder, or channel configuration is invalid."""


class EnumerationLimitError(ValueError):
    """Exhaustive enumeration would exceed the configured subset budget."""


class ImpossibleOutcomeError(RuntimeError):
    """Every candidate defective set assigns zero likelihood to the outcomes."""


class ConsistencyError(RuntimeError):
    """A closed-form solution failed its own verification check."""
