"""Exception hierarchy shared by all modules.

The CLI maps the three top-level families onto exit codes: configuration
problems exit with 2, missing or stale upstream artifacts with 3, and bad
input data with 4.
"""

from __future__ import annotations


class AefaultError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(AefaultError, ValueError):
    """Invalid configuration or inconsistent parameters."""


class ParameterError(ConfigError):
    """An argument is outside the domain accepted by an operation."""


class DataError(AefaultError, ValueError):
    """Input data is malformed or cannot be processed."""


class DimensionError(DataError):
    """Array shapes or vector lengths do not agree."""


class UndefinedCorrelationError(DataError):
    """Correlation requested for a vector with zero variance."""


class UnfillableSignalError(DataError):
    """A signal has no observed value at all, so imputation has no anchor."""


class UndefinedContributionError(DataError):
    """Contribution percentages requested for an all-zero error vector."""


class DegenerateAnomalyError(DataError):
    """An anomaly whose first start equals its last end has no span."""


class UndefinedScoreError(DataError):
    """A score needs at least one anomaly with positive span."""


class DuplicateEntryError(DataError):
    """A look-up table lists the same sensor twice."""


class EmptyReportError(DataError):
    """Root-cause analysis was requested for a non-anomalous window."""


class IntegrityError(DataError):
    """A persisted artifact failed its checksum or is truncated."""


class UnsupportedVersionError(DataError):
    """A persisted artifact was written with an unknown format version."""


class PrerequisiteError(AefaultError):
    """An upstream artifact needed by a command does not exist."""


class StaleArtifactError(PrerequisiteError):
    """An upstream artifact was produced from a different configuration."""
