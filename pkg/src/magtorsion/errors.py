"""Exception hierarchy shared by all magtorsion modules.

The CLI maps these onto process exit codes: ConfigError -> 2,
DataError -> 3, NumericalError -> 4.
"""


class MagtorsionError(Exception):
    """Base class for all magtorsion errors."""


class DomainError(MagtorsionError, ValueError):
    """A physical parameter or argument is outside its valid domain."""


class DataError(MagtorsionError, ValueError):
    """Input data is malformed, degenerate, or insufficient for the operation."""


class NumericalError(MagtorsionError, RuntimeError):
    """A numerical procedure failed (step underflow, non-convergence)."""


class ConfigError(MagtorsionError, ValueError):
    """A run configuration file is missing, unparsable, or invalid."""
