class ValidationError(ValueError):
    """Input violates a documented precondition."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class ConstructionError(ValueError):
    """A channel cannot be built from the given specification."""


class StructureError(ValueError):
    """Channel does not have the jump/diagonal Kraus structure required."""


class ConfigError(ValidationError):
    """Malformed experiment or channel configuration."""
