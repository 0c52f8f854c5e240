"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: ConfigError -> 2, ProviderError -> 3,
DataError -> 4.
"""


class MiraError(Exception):
    pass


class ConfigError(MiraError):
    """Invalid configuration, flags, or preconditions caught before any work."""


class DataError(MiraError):
    """Malformed or inconsistent corpus/report data."""


class ProviderError(MiraError):
    """Embedding/fact provider transport or protocol failure."""


class PageSkipped(DataError):
    """A page could not contribute a (document, summary) pair; non-fatal."""


class ClusterEmpty(DataError):
    """Every page of a cluster was skipped."""
