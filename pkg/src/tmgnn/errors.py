"""Exception taxonomy shared across the package.

Everything user-facing derives from TmgnnError so the CLI can map it to
exit code 1 (validation failure) and leave genuine bugs as exit code 2.
"""


class TmgnnError(Exception):
    """Base class for all errors raised on bad inputs or configuration."""


class ShapeError(TmgnnError):
    """Tensor or matrix dimensions do not line up."""


class ConfigurationError(TmgnnError):
    """A configuration value is outside its legal range."""


class ContractError(TmgnnError):
    """A call violated a documented precondition."""


class DataError(TmgnnError):
    """A dataset or series is malformed or inconsistent."""


class ParseError(DataError):
    """A file could not be parsed; message carries location context."""


class DegenerateGraphError(TmgnnError):
    """A graph is unusable for the requested operation (e.g. isolated nodes)."""
