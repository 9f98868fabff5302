"""Exception types shared across the package."""


class D2dDelayError(Exception):
    """Base class for errors raised by this package."""


class NumericalInstabilityError(D2dDelayError):
    """A probability computation left its tolerance envelope."""


class ModelInconsistencyError(D2dDelayError):
    """Derived quantities violate a structural identity of the model."""


class ConfigError(D2dDelayError):
    """Invalid or unknown configuration input; message names the key."""
