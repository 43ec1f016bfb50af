"""Exception hierarchy shared across the package.

Each error class carries the process exit code the CLI maps it to.
"""


class FssrankError(Exception):
    """Base class for package errors."""

    exit_code = 2


class ConfigError(FssrankError):
    """Invalid run configuration, config file, or parameter set."""

    exit_code = 1


class ValidationError(FssrankError):
    """Input data failed schema, integrity, or precondition checks."""

    exit_code = 1


class ComputationError(FssrankError):
    """A score or statistic was requested on inputs where it is undefined."""

    exit_code = 2
