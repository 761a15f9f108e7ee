"""Exception types shared across the package."""


class FermiClusterError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(FermiClusterError):
    """Raised when a run configuration is malformed or inconsistent."""


class CapacityError(FermiClusterError):
    """Raised when a requested problem exceeds the exact-arithmetic capacity.

    The bitmask representation keeps every monomial in a pair of machine
    integers, which caps the number of distinct generators per family.
    Anything larger has to go through the truncated pipeline instead.
    """


class ParityError(FermiClusterError):
    """Raised when an operation requires even (commuting) input and gets odd terms."""


class NormalizationError(FermiClusterError):
    """Raised when a partition function or normalization constant vanishes."""
