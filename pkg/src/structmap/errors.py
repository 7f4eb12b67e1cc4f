"""Exception types shared across the package."""


class StructmapError(Exception):
    """Base class for all package errors."""


class BadMagicError(StructmapError):
    """File does not start with the expected magic bytes or version."""


class DimMismatchError(StructmapError):
    """Vector or matrix dimensions do not agree."""


class RowOutOfRangeError(StructmapError):
    """A token references a row beyond the vector store."""


class CountMismatchError(StructmapError):
    """Vector payload size disagrees with the header count."""


class NonFiniteError(StructmapError):
    """A stored vector contains NaN or Inf."""


class InconsistentGroupError(StructmapError):
    """Variants of one group differ in length or function-word mask."""


class MetaFormatError(StructmapError):
    """A metadata line is malformed or carries wrong fields."""


class InvalidDatasetError(StructmapError):
    """A loaded dataset violates record-level invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class InvalidConfigError(StructmapError):
    """A configuration value is out of range or unusable."""


class NoUsableGroupsError(StructmapError):
    """No group has enough variants and content positions to sample from."""


class NoValidNegativeError(StructmapError):
    """Every batch entry shares one group; mining has no candidates."""


class UnminedBatchError(StructmapError):
    """Batch passed to the loss before negatives were mined."""


class InvalidDimsError(StructmapError):
    """Requested map dimensions are not positive."""


class MissingAnnotationsError(StructmapError):
    """The dataset lacks the annotations an evaluation needs."""


class EmptyCandidateSetError(StructmapError):
    """The exclusion rule removed every candidate for every query."""


class LengthMismatchError(StructmapError):
    """Paired sequences have different lengths."""


class InsufficientDataError(StructmapError):
    """Not enough tokens for the requested split sizes."""


class ConfigError(StructmapError):
    """CLI configuration file is malformed or has unknown keys."""
