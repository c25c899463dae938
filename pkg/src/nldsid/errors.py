class NLDSError(Exception):
    """Base class for package errors."""


class ConfigError(NLDSError, ValueError):
    pass


class NonExpansiveLinkError(ConfigError):
    pass


class LayoutError(ConfigError):
    pass


class MissingNoiseError(NLDSError, ValueError):
    pass


class DivergenceError(NLDSError, ArithmeticError):
    """A simulated state became non-finite."""

    def __init__(self, index: int, message: str | None = None):
        self.index = index
        super().__init__(message or f"non-finite state at index {index}")


class AggregationError(NLDSError, RuntimeError):
    pass
