"""Exception hierarchy shared by all modules."""


class SampletError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(SampletError, ValueError):
    pass


class ConfigError(SampletError, ValueError):
    pass


class UnsupportedDimensionError(ConfigError):
    pass


class IndexSetError(SampletError, ValueError):
    pass


class EmptyClusterError(SampletError):
    pass


class UnderResolvedLeafError(SampletError):
    """A leaf holds fewer points than required."""

    def __init__(self, cell, size, required):
        self.cell = cell
        self.size = size
        self.required = required
        super().__init__(
            f"leaf {cell} holds {size} point(s), at least {required} required"
        )


class DegenerateConfigurationError(SampletError):
    """A Gram block or moment matrix is numerically singular.

    ``index`` is the 0-based position of the offending member (or block size).
    """

    def __init__(self, message, index=None):
        self.index = index
        super().__init__(message)


class DegenerateLeafError(DegenerateConfigurationError):
    pass


class GeometryError(SampletError, ValueError):
    pass


class TreeMismatchError(SampletError, ValueError):
    pass
