"""Exception hierarchy shared across the pipeline.

Two broad classes matter to callers (and to the CLI exit-code mapping):
``DataError`` for anything wrong with inputs, files, or shapes, and
``NumericError`` for numerical/training failures on otherwise valid data.
"""


class NgclError(Exception):
    """Base class for all pipeline errors."""


class DataError(NgclError):
    """Invalid, malformed, or missing input data (CLI exit code 2)."""


class ParseError(DataError):
    """Malformed recording or dataset file; message names the offending line."""


class MetadataError(DataError):
    """Invalid or inconsistent sidecar metadata."""


class MissingAnnotationError(DataError):
    """A required annotation (e.g. seizure onset) is absent."""


class ShapeError(DataError):
    """Array dimensions disagree with the declared structure."""


class TooShortError(DataError):
    """Signal or segment is shorter than the operation requires."""


class DegenerateInputError(DataError):
    """Input is structurally valid but degenerate (e.g. all-zero matrix)."""


class EmptyBandError(DataError):
    """A frequency band contains no evaluable grid points."""


class StratificationError(DataError):
    """A class has too few members for the requested fold count."""


class MissingArtifactError(DataError):
    """A required pipeline artifact (checkpoint, dataset) was not found."""


class NumericError(NgclError):
    """Numerical or training failure (CLI exit code 3)."""


class StabilityError(NumericError):
    """Requested VAR coefficient set defines an unstable process."""


class SingularityError(NumericError):
    """Rank-deficient regression; the model order may be too high."""


class IllConditionedError(NumericError):
    """Matrix inverse requested at condition number beyond tolerance."""


class DegenerateBatchError(NumericError):
    """A contrastive batch admits no valid anchor/positive structure."""


class TrainingError(NumericError):
    """Training could not make progress (e.g. every batch degenerate)."""
