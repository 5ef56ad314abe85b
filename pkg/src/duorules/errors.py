"""Shared exception types."""


class SchemaMismatchError(ValueError):
    """An observation, literal, or file does not fit the expected schema."""


class DataFormatError(ValueError):
    """Input data violates a structural precondition (bad label, empty file, ...)."""


class ConfigError(ValueError):
    """A configuration value violates its invariants."""
