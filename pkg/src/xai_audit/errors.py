"""Exception hierarchy. The CLI maps each family to a distinct exit code."""


class AuditError(Exception):
    """Base class for every error raised by this package."""


class DataError(AuditError, ValueError):
    """Malformed input data: unreadable files, bad cells, degenerate label sets."""


class TrainingError(AuditError, RuntimeError):
    """A model failed to train, e.g. the loss became non-finite."""


class ConfigError(AuditError, ValueError):
    """Inconsistent run configuration, such as a method a model kind cannot produce."""
