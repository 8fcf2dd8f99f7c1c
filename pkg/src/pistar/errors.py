"""Exception hierarchy shared by all pistar modules."""


class PistarError(Exception):
    """Base class for every error raised by pistar."""


class DomainError(PistarError, ValueError):
    """Argument outside the domain of a function."""


class SingularityError(DomainError):
    """Evaluation requested exactly at a logarithmic singularity."""


class GeometryError(PistarError, ValueError):
    """Invalid star geometry or interaction-site set."""


class DuplicateSiteError(GeometryError):
    """Two interaction sites coincide."""


class DimensionError(PistarError, ValueError):
    """Array shapes do not match."""


class BracketError(PistarError, RuntimeError):
    """A root bracket could not be established."""


class NoRootError(BracketError):
    """A monotone secular function has no sign change in the scanned range."""


class ConfigError(PistarError, ValueError):
    """Malformed run configuration."""


class CoarseGridWarning(UserWarning):
    """Eigencurve branch counting was unstable on the search grid."""
