"""Shared exception types."""


class NonFiniteInputError(ValueError):
    """Raised when a feature array or file payload contains NaN or infinity."""
