"""Exception types shared across the package."""


class SoftNeatError(Exception):
    pass


class ConfigurationError(SoftNeatError, ValueError):
    """Invalid parameter, unknown name or incompatible shapes."""


class StructuralError(SoftNeatError):
    """A genome violates the feed-forward contract."""


class MorphologyError(SoftNeatError, ValueError):
    """Invalid SAM (bounds, codes, anchoring)."""


class SamParseError(MorphologyError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SimulationDiverged(SoftNeatError):
    """Raised when a node position becomes non-finite."""

    def __init__(self, time):
        self.time = time
        super().__init__(f"simulation diverged at t={time:.6g} s")


class ArityError(ConfigurationError):
    """Wrong number of items, e.g. an aptitude set that is not nine SAMs."""
