"""Exception hierarchy shared by the library and the CLI."""


class TileZetaError(Exception):
    """Base class for library errors."""


class SubstitutionError(TileZetaError, ValueError):
    """Invalid input or an unsupported request (maps to CLI exit code 1)."""


class ConsistencyError(TileZetaError, RuntimeError):
    """An internal cross-check failed (maps to CLI exit code 3)."""


class CapExceeded(TileZetaError, RuntimeError):
    """An enumeration exceeded its configured cap."""
