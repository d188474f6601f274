"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
AnalysisError -> 4.
"""


class FairauditError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(FairauditError):
    """Invalid run configuration, schema file, or CLI arguments."""


class DataError(FairauditError):
    """Invalid or inconsistent input data."""


class AnalysisError(FairauditError):
    """An analysis could not be carried out on otherwise valid data."""
