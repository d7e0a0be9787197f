"""Exception types raised across the discovery pipeline."""


class ObjScoutError(Exception):
    """Base class for all objscout errors."""


class ConfigError(ObjScoutError, ValueError):
    """A run parameter is out of its documented range."""


class NoOverlapError(ObjScoutError):
    """A box lies entirely outside the frame it was clipped against."""


class EmptyImageError(ObjScoutError):
    """An image operation received a zero-sized image."""


class ZeroPassesError(ObjScoutError):
    """The barrier-distance transform needs at least one scan pass."""


class ParseError(ObjScoutError):
    """A proposal manifest or embedding file is structurally malformed."""


class SchemaError(ObjScoutError):
    """A manifest record is readable but violates the schema."""


class DimMismatchError(ObjScoutError):
    """Embedding dimensions disagree within a run."""


class CountMismatchError(ObjScoutError):
    """An embedding file's row count differs from the frame's proposal count."""


class NonContiguousFrameError(ObjScoutError):
    """A frame index skipped ahead of the graph's latest frame."""


class EmptyPathError(ObjScoutError):
    """An empty track path cannot emit a detection."""


class InsufficientHistoryError(ObjScoutError):
    """Template building needs at least two matched path entries."""


class TemplateLargerThanRegionError(ObjScoutError):
    """The correlation search region cannot contain the template."""


class NoGroundTruthError(ObjScoutError):
    """A metric that needs ground truth was given none."""


class NonBinaryMaskError(ObjScoutError):
    """An annotation mask holds values other than 0 and its maximum."""
