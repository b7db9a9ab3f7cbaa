"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A constructor or config document received invalid parameters."""


class RangeError(ValueError):
    """A geometric query (annulus, bins) falls outside the valid range."""


class DegenerateConfigError(ConfigError):
    """A configuration is formally valid but selects an empty measurement
    (e.g. a heralding mask passing zero probability mass)."""


class MixedStateError(TypeError):
    """A pure-state-only operation was called on a state with visibility < 1."""


class UndefinedRatioError(ArithmeticError):
    """A g2 ratio is requested on a bin with zero reference probability
    but nonzero coincidence probability."""


class SamplerStallError(RuntimeError):
    """The rejection sampler exceeded its retry cap; the target density is
    (numerically) zero almost everywhere."""
