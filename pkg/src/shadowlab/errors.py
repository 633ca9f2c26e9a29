"""Exception types shared across the package."""


class ShadowlabError(Exception):
    """Base class for errors raised by shadowlab."""


class ArgumentError(ShadowlabError):
    """A caller-supplied argument is malformed or out of contract."""


class SpecificationError(ShadowlabError):
    """An operator description fails its structural invariants."""


class SingularOperatorError(ShadowlabError):
    """A negative power or backward step was requested from a
    non-invertible operator."""


class ConvergenceError(ShadowlabError):
    """A numerical routine failed to converge; the message carries the
    diagnostic that would otherwise be lost."""


class WindowError(ShadowlabError):
    """A trajectory window is too short or inconsistent with the request."""


class ConfigError(ShadowlabError):
    """Invalid CLI/config input (unknown key, missing field, bad value)."""
