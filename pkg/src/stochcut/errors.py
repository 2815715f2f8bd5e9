"""Exception types shared across the package."""


class StochcutError(Exception):
    """Base class for all package errors."""


class InstanceError(StochcutError, ValueError):
    """Instance file could not be parsed or violates an invariant."""


class ConfigError(StochcutError, ValueError):
    """Run configuration is missing, malformed or inconsistent."""


class SamplingError(StochcutError, RuntimeError):
    """Rejection sampling exhausted its attempt budget."""


class EmptySampleError(StochcutError, ValueError):
    """A least-squares solve was requested before any transition was absorbed."""
