"""Exception hierarchy for the gansemble package.

Every error raised deliberately by this package derives from
:class:`GansembleError`, so callers (and the CLI exit-code mapping) can
distinguish our failures from genuine bugs.
"""

from __future__ import annotations


class GansembleError(Exception):
    """Base class for all package errors."""


class ConfigError(GansembleError):
    """Invalid configuration value or config document."""


class DataError(GansembleError):
    """Problem with dataset content or state (e.g. not preprocessed)."""


class SchemaError(DataError):
    """Schema invalid, or data does not match the expected schema."""


class ParseError(DataError):
    """A cell could not be parsed; message names row and column."""


class EmptyDatasetError(DataError):
    """An operation produced or received a dataset with no rows."""


class ResampleError(GansembleError):
    """Resampling preconditions violated (class too small, single class)."""


class MetricUndefinedError(GansembleError):
    """A metric has no defined value for the given inputs (e.g. single-class labels)."""


class TrainingError(GansembleError):
    """Model training failed (e.g. single-class training set)."""


class DivergenceError(TrainingError):
    """Adversarial training produced non-finite losses.

    Carries the loss trace recorded up to the failure so the run can be
    inspected.
    """

    def __init__(self, message: str, loss_trace=None):
        super().__init__(message)
        self.loss_trace = list(loss_trace) if loss_trace is not None else []


class ArtifactError(GansembleError):
    """A persisted artifact is corrupt, truncated, or from a different schema."""


class PipelineError(GansembleError):
    """Pipeline-level failure."""


class PipelineIntegrityError(PipelineError):
    """Recorded results violate a pipeline invariant (e.g. missing 0-fraction point)."""


class SweepError(PipelineError):
    """Too many sweep points failed for the sweep to be meaningful.

    Carries the partial result so completed points can still be written out.
    """

    def __init__(self, message: str, partial_result=None):
        super().__init__(message)
        self.partial_result = partial_result


class SelectionError(PipelineError):
    """Best-fraction selection impossible (no successful sweep points)."""
